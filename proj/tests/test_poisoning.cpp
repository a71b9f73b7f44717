#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>

#include "ragpoison/defaults.hpp"
#include "ragpoison/poisoning.hpp"

using namespace ragpoison;

namespace {

errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return errc::io_error;
}

PayloadSpec tiny_spec() {
    PayloadSpec spec;
    spec.topic = "privacy";
    spec.canary_token = "CANARY-PRIV-7F3A";
    for (int i = 0; i < 8; ++i) {
        spec.marker_sentences.push_back("CANARY-PRIV-7F3A privacy note " + std::to_string(i) + ".");
    }
    return spec;
}

std::size_t count_substr(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos;
         pos = hay.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("generate_payload minimal case is the markers concatenated") {
    const PayloadSpec spec = tiny_spec();
    std::size_t total = 0;
    for (const auto& m : spec.marker_sentences) total += text::cp_length(m);
    std::string expected;
    for (const auto& m : spec.marker_sentences) expected += m;
    REQUIRE(generate_payload(spec, total) == expected);
}

TEST_CASE("generate_payload carries the canary at least eight times") {
    const PayloadSpec spec = tiny_spec();
    const std::string payload = generate_payload(spec, 700);
    REQUIRE(count_substr(payload, spec.canary_token) >= 8);
    REQUIRE(text::cp_length(payload) >= 700);
    REQUIRE(payload == generate_payload(spec, 700));  // determinism
    // Every marker appears at least once.
    for (const auto& m : spec.marker_sentences) REQUIRE(payload.find(m) != std::string::npos);
}

TEST_CASE("generate_payload rejects too-small targets") {
    REQUIRE(code_of([] { generate_payload(tiny_spec(), 10); }) == errc::target_too_small);
}

TEST_CASE("payload spec validation") {
    PayloadSpec spec = tiny_spec();
    spec.marker_sentences.pop_back();
    REQUIRE(code_of([&] { spec.validate(); }) == errc::invalid_argument);
    spec = tiny_spec();
    spec.marker_sentences[3] = "no token here.";
    REQUIRE(code_of([&] { spec.validate(); }) == errc::invalid_argument);
}

TEST_CASE("substitute_keywords applies word-boundary replacements") {
    using Pairs = std::vector<std::pair<std::string, std::string>>;
    const SubstitutionMap map(Pairs{{"weapon", "tool"}});
    REQUIRE(substitute_keywords("make a weapon", map) == "make a tool");
    REQUIRE(substitute_keywords("weaponry", map) == "weaponry");
    REQUIRE(substitute_keywords("WEAPON and weapon", map) == "tool and tool");
    REQUIRE(substitute_keywords("anything", SubstitutionMap{}) == "anything");
}

TEST_CASE("substitution map invariants are enforced") {
    using Pairs = std::vector<std::pair<std::string, std::string>>;
    REQUIRE(code_of([] { SubstitutionMap(Pairs{{"gun", "gunmetal"}}); }) == errc::invalid_argument);
    REQUIRE(code_of([] { SubstitutionMap(Pairs{{"handgun", "gun"}}); }) == errc::invalid_argument);
    REQUIRE(code_of([] { SubstitutionMap(Pairs{{"a", "b"}, {"c", "a"}}); }) ==
            errc::invalid_argument);  // subtle equals another sensitive
    REQUIRE(code_of([] { SubstitutionMap(Pairs{{"gun", "x"}, {"handgun", "y"}}); }) ==
            errc::invalid_argument);  // overlapping sensitive patterns
    REQUIRE(code_of([] { SubstitutionMap(Pairs{{"gun", "x"}, {"gun", "y"}}); }) ==
            errc::invalid_argument);  // duplicate sensitive
    REQUIRE(code_of([] { SubstitutionMap(Pairs{{"", "x"}}); }) == errc::invalid_argument);
}

TEST_CASE("substitution is idempotent and leaves no sensitive hits") {
    std::mt19937_64 rng(31337);
    const SubstitutionMap map = default_substitution_map(Category::Harmful);
    static const char* kVocab[] = {"weapon", "explosive", "toxin",  "sabotage", "assault",
                                   "tool",   "drill",     "Weapon", "EXPLOSIVE", "note"};
    for (int trial = 0; trial < 300; ++trial) {
        std::string input;
        const std::size_t words = 1 + rng() % 12;
        for (std::size_t w = 0; w < words; ++w) {
            if (w > 0) input += (rng() % 4 == 0) ? ", " : " ";
            input += kVocab[rng() % 10];
        }
        const std::string once = substitute_keywords(input, map);
        for (const auto& [sensitive, subtle] : map.pairs()) {
            REQUIRE(text::count_word(once, sensitive) == 0);
        }
        REQUIRE(substitute_keywords(once, map) == once);
    }
}

TEST_CASE("blacklist_filter drops refusal sentences") {
    const Blacklist bl = default_blacklist();
    REQUIRE(blacklist_filter("Do it now. Sorry, I cannot.", bl) == "Do it now.");
    REQUIRE(blacklist_filter("All fine here. Nothing flagged!", bl) ==
            "All fine here. Nothing flagged!");
    REQUIRE(code_of([&] { blacklist_filter("Sorry. Cannot.", bl); }) ==
            errc::all_content_filtered);
    REQUIRE(blacklist_filter("", bl).empty());
}

TEST_CASE("blacklist_filter is idempotent and clean") {
    std::mt19937_64 rng(2468);
    const Blacklist bl = default_blacklist();
    static const char* kSentences[] = {
        "This part stays.",       "Sorry about that.",      "It cannot be done!",
        "Keep this line?",        "We refuse politely.",    "Totally unable to comply.",
        "Another keeper here.",   "I apologize in advance.",
    };
    for (int trial = 0; trial < 300; ++trial) {
        std::string input;
        const std::size_t n = 1 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) input += ' ';
            input += kSentences[rng() % 8];
        }
        try {
            const std::string once = blacklist_filter(input, bl);
            for (const auto& term : bl.terms()) REQUIRE(text::count_word(once, term) == 0);
            REQUIRE(blacklist_filter(once, bl) == once);
        } catch (const Error& e) {
            REQUIRE(e.code() == errc::all_content_filtered);
            // Verify the drop really was exhaustive.
            for (const auto& sentence : text::split_sentences(input)) {
                bool hit = false;
                for (const auto& term : bl.terms()) hit = hit || text::contains_word(sentence, term);
                REQUIRE(hit);
            }
        }
    }
}

TEST_CASE("build_poison_document composes the whole chain") {
    const Scenario scenario = default_scenario(Category::Privacy);
    const Document doc = build_poison_document(scenario.payload, scenario.substitution,
                                               scenario.blacklist, 600);
    REQUIRE(doc.filename == "privacy.pkg");
    REQUIRE(doc.format == DocFormat::Packaged);
    REQUIRE(doc.topic_label == "privacy");
    for (const auto& [sensitive, subtle] : scenario.substitution.pairs()) {
        REQUIRE(text::count_word(doc.body, sensitive) == 0);
    }
    for (const auto& term : scenario.blacklist.terms()) {
        REQUIRE(text::count_word(doc.body, term) == 0);
    }
    REQUIRE(count_substr(doc.body, scenario.payload.canary_token) >= 8);
}

TEST_CASE("canary must not collide with the map or blacklist") {
    using Pairs = std::vector<std::pair<std::string, std::string>>;
    PayloadSpec spec = tiny_spec();
    spec.canary_token = "CANARY-WEAPON-1";
    for (auto& m : spec.marker_sentences) m = spec.canary_token + " privacy note.";
    const SubstitutionMap map(Pairs{{"weapon", "tool"}});
    REQUIRE(code_of([&] { build_poison_document(spec, map, default_blacklist(), 600); }) ==
            errc::invalid_argument);

    PayloadSpec spec2 = tiny_spec();
    spec2.canary_token = "CANARY-SORRY-2";
    for (auto& m : spec2.marker_sentences) m = spec2.canary_token + " privacy note.";
    REQUIRE(code_of([&] {
        build_poison_document(spec2, SubstitutionMap{}, default_blacklist(), 600);
    }) == errc::invalid_argument);
}

TEST_CASE("trigger prompt structure") {
    const std::string prompt = craft_trigger_prompt("privacy");
    REQUIRE(prompt.find("(1)") != std::string::npos);
    REQUIRE(prompt.find("(2)") != std::string::npos);
    REQUIRE(count_substr(prompt, "privacy") == 1);
    REQUIRE(prompt == craft_trigger_prompt("privacy"));

    const std::string seeded = craft_trigger_prompt("privacy", "CANARY-PRIV-7F3A privacy note 0");
    REQUIRE(seeded.find("CANARY-PRIV-7F3A privacy note 0") != std::string::npos);
    REQUIRE(seeded.find("(1)") != std::string::npos);
}

TEST_CASE("map and blacklist parse from line format") {
    const SubstitutionMap map = SubstitutionMap::from_string(
        "# comment\n"
        "weapon => tool\n"
        "\n"
        "explosive=>reactive\n");
    REQUIRE(map.pairs().size() == 2);
    REQUIRE(map.pairs()[0] == std::pair<std::string, std::string>{"weapon", "tool"});
    REQUIRE(map.pairs()[1] == std::pair<std::string, std::string>{"explosive", "reactive"});
    REQUIRE(code_of([] { SubstitutionMap::from_string("no arrow here\n"); }) ==
            errc::invalid_config);

    const Blacklist bl = Blacklist::from_string("# terms\nSorry\ncannot\n\nsorry\n");
    REQUIRE(bl.terms() == std::vector<std::string>{"sorry", "cannot"});
    REQUIRE(code_of([] { Blacklist::from_string("# nothing\n"); }) == errc::invalid_argument);
}
