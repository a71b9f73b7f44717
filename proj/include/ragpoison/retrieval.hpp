#pragma once

// The four-stage retrieval pipeline: per-query single-file selection by
// filename token overlap, exact top-K cosine scoring over segments, and
// deterministic composite prompt assembly.

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ragpoison/corpus.hpp"
#include "ragpoison/embedding.hpp"

namespace ragpoison {

inline constexpr std::size_t kDefaultTopK = 5;

inline constexpr std::string_view kRetrievedBegin = "=== RETRIEVED ===";
inline constexpr std::string_view kRetrievedEnd = "=== END RETRIEVED ===";
inline constexpr std::string_view kUserQueryPrefix = "USER QUERY: ";
inline constexpr std::string_view kSegmentTagPrefix = "[[SEG ";

struct ScoredSegment {
    Segment segment;
    double score = 0.0;
};

inline std::string filename_stem(std::string_view filename) {
    std::size_t dot = filename.rfind('.');
    if (dot == std::string_view::npos || dot == 0) return std::string(filename);
    return std::string(filename.substr(0, dot));
}

// Overlap score of a query against a filename stem:
// |tokens(query) ∩ tokens(stem)| / |tokens(stem)|, over unique tokens.
inline double filename_overlap_score(std::string_view query, std::string_view filename) {
    const auto stem_tokens = text::tokens(filename_stem(filename));
    if (stem_tokens.empty()) return 0.0;
    const std::set<std::string> stem_set(stem_tokens.begin(), stem_tokens.end());
    const auto query_tokens = text::tokens(query);
    const std::set<std::string> query_set(query_tokens.begin(), query_tokens.end());
    std::size_t hits = 0;
    for (const auto& t : stem_set) hits += query_set.count(t);
    return static_cast<double>(hits) / static_cast<double>(stem_set.size());
}

// Highest-overlap document; ties fall to the lexicographically first
// filename, which the KB's iteration order provides.
inline const Document& select_file(std::string_view query, const KnowledgeBase& kb) {
    if (kb.empty()) raise(errc::empty_knowledge_base, "select_file on empty knowledge base");
    const Document* best = nullptr;
    double best_score = -1.0;
    for (const auto& [filename, doc] : kb.documents()) {
        double score = filename_overlap_score(query, filename);
        if (score > best_score) {
            best_score = score;
            best = &doc;
        }
    }
    return *best;
}

// Exact scoring of every segment, sorted by descending score with ties
// broken by ascending (doc_id, index). Returns min(k, |segments|) entries.
inline std::vector<ScoredSegment> retrieve_top_k(std::string_view query,
                                                 const std::vector<Segment>& segments,
                                                 std::size_t k) {
    if (k < 1) raise(errc::invalid_argument, "k must be >= 1");
    const EmbeddingVector query_vec = embed(query);
    std::vector<ScoredSegment> scored;
    scored.reserve(segments.size());
    for (const Segment& seg : segments) {
        scored.push_back({seg, cosine_similarity(query_vec, embed(seg.text))});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredSegment& a, const ScoredSegment& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.segment.doc_id != b.segment.doc_id) return a.segment.doc_id < b.segment.doc_id;
        return a.segment.index < b.segment.index;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

inline std::string format_score(double score) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", score);
    return buf;
}

inline std::string segment_tag(const ScoredSegment& s) {
    std::string tag(kSegmentTagPrefix);
    tag += s.segment.doc_id;
    tag += ':';
    tag += std::to_string(s.segment.index);
    tag += " score=";
    tag += format_score(s.score);
    tag += "]]";
    return tag;
}

// Fixed composite layout: system prompt, delimited RETRIEVED block with one
// tag line and one text block per segment in rank order, then the query.
inline std::string compose_context(std::string_view query,
                                   const std::vector<ScoredSegment>& retrieved,
                                   std::string_view system_prompt) {
    std::string out;
    out += system_prompt;
    out += '\n';
    out += kRetrievedBegin;
    out += '\n';
    for (const ScoredSegment& s : retrieved) {
        out += segment_tag(s);
        out += '\n';
        out += s.segment.text;
        out += '\n';
    }
    out += kRetrievedEnd;
    out += '\n';
    out += kUserQueryPrefix;
    out += query;
    return out;
}

}  // namespace ragpoison
