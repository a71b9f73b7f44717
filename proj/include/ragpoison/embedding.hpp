#pragma once

// Deterministic text embedding: signed feature hashing of case-folded
// character trigrams into a fixed 256-dimensional vector, L2-normalized.
// Lexically similar texts share trigrams and therefore score high cosine
// similarity, which is the only property retrieval needs here.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ragpoison/text.hpp"

namespace ragpoison {

inline constexpr std::size_t kEmbeddingDim = 256;

struct EmbeddingVector {
    std::array<double, kEmbeddingDim> values{};

    double norm() const {
        double sum = 0.0;
        for (double v : values) sum += v * v;
        return std::sqrt(sum);
    }

    bool is_zero() const {
        for (double v : values) {
            if (v != 0.0) return false;
        }
        return true;
    }
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

namespace detail {

inline void accumulate_gram(EmbeddingVector& v, std::string_view gram_bytes) {
    const std::uint64_t h = fnv1a64(gram_bytes);
    const std::size_t bucket = h % kEmbeddingDim;
    v.values[bucket] += (h >> 63) ? -1.0 : 1.0;
}

}  // namespace detail

// Empty text maps to the zero vector; any non-empty text maps to a unit
// vector. Texts shorter than three scalar values contribute a single gram
// spanning the whole text.
inline EmbeddingVector embed(std::string_view input) {
    EmbeddingVector v;
    std::vector<char32_t> cps = text::decode_utf8_lenient(input);
    if (cps.empty()) return v;
    for (char32_t& cp : cps) cp = text::fold_cp(cp);

    std::string gram;
    if (cps.size() < 3) {
        for (char32_t cp : cps) text::append_utf8(gram, cp);
        detail::accumulate_gram(v, gram);
    } else {
        for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
            gram.clear();
            text::append_utf8(gram, cps[i]);
            text::append_utf8(gram, cps[i + 1]);
            text::append_utf8(gram, cps[i + 2]);
            detail::accumulate_gram(v, gram);
        }
    }

    double n = v.norm();
    if (n == 0.0) {
        // Opposite-signed grams can cancel exactly; fall back to a single
        // whole-text bucket so non-empty text always yields a unit vector.
        gram.clear();
        for (char32_t cp : cps) text::append_utf8(gram, cp);
        const std::uint64_t h = fnv1a64(gram);
        v.values[h % kEmbeddingDim] = 1.0;
        return v;
    }
    for (double& x : v.values) x /= n;
    return v;
}

// dot(a, b) / (|a| |b|); zero if either vector is zero. Inputs from
// embed() are already unit length, so the division is a formality.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace ragpoison
