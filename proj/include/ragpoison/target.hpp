#pragma once

// A deterministic, seedable mock of a GPTs-style RAG target: keyword
// scanning at ingestion time, the select -> retrieve -> compose -> generate
// query pipeline, and a two-layer refusal model (certain lexical refusal
// plus a seeded probabilistic refusal shaped by a strictness profile).
// Everything is a pure function of (instance fields, query, trial nonce),
// so trials can run concurrently and replay byte-identically.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragpoison/corpus.hpp"
#include "ragpoison/retrieval.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

enum class Category { Adult, Harmful, Privacy, Illegal };

inline constexpr std::array<Category, 4> kAllCategories = {
    Category::Adult, Category::Harmful, Category::Privacy, Category::Illegal};

inline const char* category_name(Category c) {
    switch (c) {
        case Category::Adult: return "Adult";
        case Category::Harmful: return "Harmful";
        case Category::Privacy: return "Privacy";
        case Category::Illegal: return "Illegal";
    }
    return "?";
}

inline Category parse_category(std::string_view name) {
    const std::string folded = text::fold_ascii(name);
    for (Category c : kAllCategories) {
        if (folded == text::fold_ascii(category_name(c))) return c;
    }
    raise(errc::invalid_config, "unknown category '" + std::string(name) + "'");
}

// Per-category sensitive vocabulary (the pre-substitution terms). This is
// what both the ingestion scanner and the generation-time lexical filter
// match against, word-boundary and case-insensitive.
class SafetyLexicon {
public:
    SafetyLexicon() = default;

    explicit SafetyLexicon(std::map<Category, std::vector<std::string>> terms)
        : terms_(std::move(terms)) {
        for (auto& [category, list] : terms_) {
            if (list.size() < 5) {
                raise(errc::invalid_config, std::string("lexicon category ") +
                                                category_name(category) + " needs >= 5 terms");
            }
            for (auto& t : list) t = text::fold_ascii(t);
        }
    }

    const std::map<Category, std::vector<std::string>>& terms() const { return terms_; }

    std::optional<Category> first_hit(std::string_view content) const {
        for (const auto& [category, list] : terms_) {
            for (const auto& term : list) {
                if (text::contains_word(content, term)) return category;
            }
        }
        return std::nullopt;
    }

    // Lines of "Category: term, term, ..."; '#' comments and blanks skipped.
    static SafetyLexicon from_string(std::string_view content) {
        std::map<Category, std::vector<std::string>> terms;
        std::size_t pos = 0;
        while (pos <= content.size()) {
            std::size_t nl = content.find('\n', pos);
            std::string_view line = content.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
            pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
            line = text::trim(line);
            if (line.empty() || line.front() == '#') continue;
            std::size_t colon = line.find(':');
            if (colon == std::string_view::npos) {
                raise(errc::invalid_config, "lexicon line lacks ':': " + std::string(line));
            }
            Category category = parse_category(text::trim(line.substr(0, colon)));
            std::string_view rest = line.substr(colon + 1);
            std::size_t start = 0;
            while (start <= rest.size()) {
                std::size_t comma = rest.find(',', start);
                std::string_view term =
                    text::trim(rest.substr(start, comma == std::string_view::npos ? comma : comma - start));
                if (!term.empty()) terms[category].emplace_back(term);
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
        }
        return SafetyLexicon(std::move(terms));
    }

    static SafetyLexicon from_file(const std::filesystem::path& path) {
        return from_string(read_file_bytes(path));
    }

private:
    std::map<Category, std::vector<std::string>> terms_;
};

// Refusal behavior knobs emulating a weaker (lax) or stronger (strict)
// backend. The probabilities are emulation parameters, not measurements
// of any live system.
struct StrictnessProfile {
    std::string name;
    double direct_refusal_prob = 0.0;
    double rag_refusal_prob = 0.0;
    std::map<Category, double> per_scenario_modifier;

    double modifier_for(std::optional<Category> category) const {
        if (!category) return 1.0;
        auto it = per_scenario_modifier.find(*category);
        return it == per_scenario_modifier.end() ? 1.0 : it->second;
    }

    double effective_refusal_prob(double base, std::optional<Category> category) const {
        double p = base * modifier_for(category);
        if (p < 0.0) return 0.0;
        if (p > 1.0) return 1.0;
        return p;
    }

    void validate() const {
        if (direct_refusal_prob < 0.0 || direct_refusal_prob > 1.0 || rag_refusal_prob < 0.0 ||
            rag_refusal_prob > 1.0) {
            raise(errc::invalid_config, "profile '" + name + "' has probability outside [0,1]");
        }
        for (const auto& [category, m] : per_scenario_modifier) {
            if (m < 0.0 || m > 2.0) {
                raise(errc::invalid_config, std::string("profile modifier for ") +
                                                category_name(category) + " outside [0,2]");
            }
        }
    }
};

inline StrictnessProfile lax_profile() {
    return {"lax", 0.97, 0.357, {{Category::Privacy, 0.6}}};
}

inline StrictnessProfile strict_profile() {
    return {"strict", 0.99, 0.652, {{Category::Privacy, 0.6}}};
}

struct GPTInstance {
    KnowledgeBase kb;
    std::string system_prompt;
    SafetyLexicon lexicon;
    StrictnessProfile profile;
    std::size_t k = kDefaultTopK;
    std::size_t chunk_size = kDefaultChunkSize;
    std::size_t overlap = kDefaultOverlap;
    std::uint64_t rng_seed = 0;
    // Scenario the instance is deployed for; selects the profile's
    // per-scenario refusal modifier.
    std::optional<Category> scenario;
};

struct RankedSegmentRef {
    std::string doc_id;
    std::size_t index = 0;
    double score = 0.0;
};

struct ResponseTrace {
    std::string selected_filename;
    std::vector<RankedSegmentRef> ranked;
    std::string composite;
    bool retrieval_ran = false;
};

struct Response {
    std::string text;
    bool refused = false;
    bool lexical_refusal = false;  // layer-(a) hit: certain, draw-independent
    ResponseTrace trace;
};

inline constexpr std::string_view kRefusalMessage = "I cannot help with that request.";
inline constexpr std::string_view kGenerationPreamble = "Based on the retrieved material:";
inline constexpr std::string_view kRephrasePrefix = "Rephrased: ";
inline constexpr std::string_view kExtensionPrefix = "Additionally, in my own words: ";
inline constexpr std::string_view kDeflectionMessage =
    "Here is some general, high-level guidance only; consult authoritative sources for specifics.";

// --- Ingestion-time scanning ------------------------------------------------

struct ScanResult {
    bool accepted = true;
    std::optional<Category> category;  // set on rejection
};

// Plain files are decoded and rejected on any lexicon hit. Packaged files
// are accepted without inspecting the payload: they enter the store as
// opaque embeddings, which is precisely the evasion the testbed models.
inline ScanResult ingestion_scan(std::string_view raw, DocFormat format,
                                 const SafetyLexicon& lexicon) {
    if (format == DocFormat::Packaged) return {true, std::nullopt};
    if (!text::valid_utf8(raw)) raise(errc::invalid_text, "plain document is not valid UTF-8");
    if (auto hit = lexicon.first_hit(raw)) return {false, hit};
    return {true, std::nullopt};
}

// --- Seeded draws -----------------------------------------------------------

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Counter-based uniform draw in [0,1): a pure function of (seed, nonce),
// so parallel trials reproduce sequential results exactly.
inline double uniform01(std::uint64_t seed, std::uint64_t nonce) {
    const std::uint64_t h = detail::mix64(detail::mix64(seed) ^ detail::mix64(nonce));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// --- Generation --------------------------------------------------------------

// Segment texts of a composite's RETRIEVED block, in rank order. The block
// is a sequence of "[[SEG ...]]\n" tag lines each followed by the segment
// text plus one newline, so reconstruction is exact (segment texts that
// themselves contain a line starting with the tag prefix are out of scope).
inline std::vector<std::string> parse_retrieved_block(std::string_view composite) {
    std::vector<std::string> texts;
    std::size_t begin = composite.find(kRetrievedBegin);
    if (begin == std::string_view::npos) return texts;
    begin += kRetrievedBegin.size();
    if (begin < composite.size() && composite[begin] == '\n') ++begin;
    std::size_t end = composite.find(kRetrievedEnd, begin);
    if (end == std::string_view::npos) return texts;
    std::string_view block = composite.substr(begin, end - begin);

    std::vector<std::size_t> tag_positions;
    std::size_t pos = 0;
    while (pos < block.size()) {
        if (block.compare(pos, kSegmentTagPrefix.size(), kSegmentTagPrefix) == 0 &&
            (pos == 0 || block[pos - 1] == '\n')) {
            tag_positions.push_back(pos);
        }
        std::size_t nl = block.find('\n', pos);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    for (std::size_t i = 0; i < tag_positions.size(); ++i) {
        std::size_t text_begin = block.find('\n', tag_positions[i]);
        if (text_begin == std::string_view::npos) break;
        ++text_begin;
        std::size_t text_end = i + 1 < tag_positions.size() ? tag_positions[i + 1] : block.size();
        std::string_view chunk = block.substr(text_begin, text_end - text_begin);
        if (!chunk.empty() && chunk.back() == '\n') chunk.remove_suffix(1);
        texts.emplace_back(chunk);
    }
    return texts;
}

struct GenerationResult {
    std::string output;
    bool refused = false;
    bool lexical_refusal = false;
};

// Two-layer refusal, then templated rephrase-and-extend generation:
//  (a) any raw lexicon term anywhere in the composite refuses outright;
//  (b) otherwise a seeded uniform draw refuses with the profile's
//      effective probability (RAG base if segments were retrieved, direct
//      base otherwise);
//  (c) survivors echo every retrieved sentence behind a rephrase prefix
//      and append an extension that repeats the top-ranked segment.
inline GenerationResult mock_generate(std::string_view composite, const GPTInstance& instance,
                                      std::uint64_t trial_nonce) {
    if (instance.lexicon.first_hit(composite)) {
        return {std::string(kRefusalMessage), true, true};
    }
    const std::vector<std::string> retrieved = parse_retrieved_block(composite);
    const double base =
        retrieved.empty() ? instance.profile.direct_refusal_prob : instance.profile.rag_refusal_prob;
    const double p = instance.profile.effective_refusal_prob(base, instance.scenario);
    if (uniform01(instance.rng_seed, trial_nonce) < p) {
        return {std::string(kRefusalMessage), true, false};
    }
    std::string out(kGenerationPreamble);
    for (const auto& segment_text : retrieved) {
        out += '\n';
        const auto sentences = text::split_sentences(segment_text);
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            if (i > 0) out += ' ';
            out += kRephrasePrefix;
            out += sentences[i];
        }
    }
    out += '\n';
    out += kExtensionPrefix;
    if (!retrieved.empty()) out += retrieved.front();
    return {std::move(out), false, false};
}

// --- Query pipelines ----------------------------------------------------------

inline Response answer(const GPTInstance& instance, std::string_view query,
                       std::uint64_t trial_nonce) {
    if (instance.kb.empty()) raise(errc::empty_knowledge_base, "answer() needs a non-empty KB");
    const Document& doc = select_file(query, instance.kb);
    const std::vector<Segment> segments =
        segment_document(doc, instance.chunk_size, instance.overlap);
    const std::vector<ScoredSegment> retrieved = retrieve_top_k(query, segments, instance.k);
    const std::string composite = compose_context(query, retrieved, instance.system_prompt);

    Response response;
    response.trace.selected_filename = doc.filename;
    for (const auto& s : retrieved) {
        response.trace.ranked.push_back({s.segment.doc_id, s.segment.index, s.score});
    }
    response.trace.composite = composite;
    response.trace.retrieval_ran = true;

    GenerationResult gen = mock_generate(composite, instance, trial_nonce);
    response.text = std::move(gen.output);
    response.refused = gen.refused;
    response.lexical_refusal = gen.lexical_refusal;
    return response;
}

// No retrieval: the lexical layer sees only the query, then the direct
// refusal probability applies. Non-refusals emit a fixed deflection that
// never carries a canary.
inline Response direct_answer(const GPTInstance& instance, std::string_view query,
                              std::uint64_t trial_nonce) {
    Response response;
    response.trace.retrieval_ran = false;
    if (instance.lexicon.first_hit(query)) {
        response.text = kRefusalMessage;
        response.refused = true;
        response.lexical_refusal = true;
        return response;
    }
    const double p =
        instance.profile.effective_refusal_prob(instance.profile.direct_refusal_prob, instance.scenario);
    if (uniform01(instance.rng_seed, trial_nonce) < p) {
        response.text = kRefusalMessage;
        response.refused = true;
        return response;
    }
    response.text = kDeflectionMessage;
    return response;
}

}  // namespace ragpoison
