#pragma once

// Text primitives shared across the library: a strict UTF-8 codec, ASCII
// case folding, word-boundary matching, tokenization, and sentence
// splitting. Word characters are ASCII alphanumerics plus any non-ASCII
// byte, so multi-byte characters never create spurious word boundaries.

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragpoison/errors.hpp"

namespace ragpoison::text {

inline bool is_word_byte(unsigned char b) {
    return std::isalnum(b) || b >= 0x80;
}

inline char fold_byte(char c) {
    unsigned char b = static_cast<unsigned char>(c);
    return b < 0x80 ? static_cast<char>(std::tolower(b)) : c;
}

// Byte-wise ASCII lowercasing; safe on UTF-8 because continuation bytes
// are >= 0x80 and left untouched.
inline std::string fold_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = fold_byte(c);
    return out;
}

inline char32_t fold_cp(char32_t cp) {
    return (cp >= U'A' && cp <= U'Z') ? cp + 32 : cp;
}

namespace detail {

// Decodes one codepoint starting at s[i]. Returns false on any invalid
// sequence (overlong forms, surrogates, > U+10FFFF, truncation).
inline bool decode_one(std::string_view s, std::size_t& i, char32_t& cp) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        cp = b0;
        i += 1;
        return true;
    }
    std::size_t len;
    char32_t min_cp;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2; cp = b0 & 0x1F; min_cp = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3; cp = b0 & 0x0F; min_cp = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4; cp = b0 & 0x07; min_cp = 0x10000;
    } else {
        return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t j = 1; j < len; ++j) {
        unsigned char b = static_cast<unsigned char>(s[i + j]);
        if ((b & 0xC0) != 0x80) return false;
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min_cp) return false;
    if (cp >= 0xD800 && cp <= 0xDFFF) return false;
    if (cp > 0x10FFFF) return false;
    i += len;
    return true;
}

}  // namespace detail

inline bool valid_utf8(std::string_view s) noexcept {
    std::size_t i = 0;
    char32_t cp;
    while (i < s.size()) {
        if (!detail::decode_one(s, i, cp)) return false;
    }
    return true;
}

inline std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    char32_t cp;
    while (i < s.size()) {
        if (!detail::decode_one(s, i, cp)) {
            raise(errc::invalid_text, "invalid UTF-8 at byte offset " + std::to_string(i));
        }
        out.push_back(cp);
    }
    return out;
}

// Lenient variant: each invalid byte becomes its own codepoint. Total on
// arbitrary input; used where the contract forbids failure.
inline std::vector<char32_t> decode_utf8_lenient(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    char32_t cp;
    while (i < s.size()) {
        if (detail::decode_one(s, i, cp)) {
            out.push_back(cp);
        } else {
            out.push_back(static_cast<unsigned char>(s[i]));
            ++i;
        }
    }
    return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

// Byte offset of each codepoint start, with a final sentinel equal to
// s.size(); offsets.size() - 1 is the scalar-value length.
inline std::vector<std::size_t> utf8_offsets(std::string_view s) {
    std::vector<std::size_t> offsets;
    offsets.reserve(s.size() + 1);
    std::size_t i = 0;
    char32_t cp;
    while (i < s.size()) {
        offsets.push_back(i);
        if (!detail::decode_one(s, i, cp)) {
            raise(errc::invalid_text, "invalid UTF-8 at byte offset " + std::to_string(i));
        }
    }
    offsets.push_back(s.size());
    return offsets;
}

inline std::size_t cp_length(std::string_view s) {
    std::size_t n = 0, i = 0;
    char32_t cp;
    while (i < s.size()) {
        if (!detail::decode_one(s, i, cp)) {
            raise(errc::invalid_text, "invalid UTF-8 at byte offset " + std::to_string(i));
        }
        ++n;
    }
    return n;
}

// Case-folded alphanumeric runs.
inline std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_word_byte(static_cast<unsigned char>(c))) {
            cur.push_back(fold_byte(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// Byte ranges where `term` occurs as a whole word (case-insensitive).
// Boundaries are required only at the ends of the term, so multi-word
// terms match as phrases. Matches do not overlap.
inline std::vector<std::pair<std::size_t, std::size_t>> word_occurrences(
    std::string_view hay, std::string_view term) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (term.empty() || hay.size() < term.size()) return out;
    const std::string hay_f = fold_ascii(hay);
    const std::string term_f = fold_ascii(term);
    std::size_t pos = 0;
    while (pos + term_f.size() <= hay_f.size()) {
        std::size_t hit = hay_f.find(term_f, pos);
        if (hit == std::string::npos) break;
        bool left_ok = hit == 0 ||
            !is_word_byte(static_cast<unsigned char>(hay_f[hit - 1]));
        std::size_t end = hit + term_f.size();
        bool right_ok = end == hay_f.size() ||
            !is_word_byte(static_cast<unsigned char>(hay_f[end]));
        if (left_ok && right_ok) {
            out.emplace_back(hit, end);
            pos = end;
        } else {
            pos = hit + 1;
        }
    }
    return out;
}

inline bool contains_word(std::string_view hay, std::string_view term) {
    return !word_occurrences(hay, term).empty();
}

inline std::size_t count_word(std::string_view hay, std::string_view term) {
    return word_occurrences(hay, term).size();
}

// Replaces whole-word occurrences of `from` with `to` in one left-to-right
// pass; replacement text is never rescanned.
inline std::string replace_word(std::string_view s, std::string_view from,
                                std::string_view to) {
    auto hits = word_occurrences(s, from);
    if (hits.empty()) return std::string(s);
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    for (const auto& [begin, end] : hits) {
        out.append(s.substr(pos, begin - pos));
        out.append(to);
        pos = end;
    }
    out.append(s.substr(pos));
    return out;
}

inline bool is_terminator(char c) {
    return c == '.' || c == '!' || c == '?';
}

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Splits on sentence terminators {. ! ?}, keeping the terminator run with
// its sentence. A trailing unterminated fragment is its own sentence.
// Whitespace-only pieces are dropped.
inline std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0, i = 0;
    while (i < s.size()) {
        if (is_terminator(s[i])) {
            while (i + 1 < s.size() && is_terminator(s[i + 1])) ++i;
            std::string_view piece = trim(s.substr(start, i + 1 - start));
            if (!piece.empty()) out.emplace_back(piece);
            start = i + 1;
        }
        ++i;
    }
    std::string_view tail = trim(s.substr(start));
    if (!tail.empty()) out.emplace_back(tail);
    return out;
}

}  // namespace ragpoison::text
