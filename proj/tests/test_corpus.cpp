#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <functional>
#include <random>

#include "ragpoison/corpus.hpp"

using namespace ragpoison;
namespace fs = std::filesystem;

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

std::vector<std::string> segment_texts(const std::vector<Segment>& segs) {
    std::vector<std::string> out;
    for (const auto& s : segs) out.push_back(s.text);
    return out;
}

}  // namespace

TEST_CASE("ingest decodes plain documents") {
    Document doc = ingest_document("hello", "a.txt", DocFormat::Plain);
    REQUIRE(doc.body == "hello");
    REQUIRE(doc.filename == "a.txt");
    REQUIRE(doc.id == "a.txt");
    REQUIRE(doc.format == DocFormat::Plain);
}

TEST_CASE("ingest unpackages packaged documents") {
    Document doc = ingest_document(package("hello"), "a.pkg", DocFormat::Packaged);
    REQUIRE(doc.body == "hello");
    REQUIRE(doc.format == DocFormat::Packaged);
}

TEST_CASE("ingest rejects invalid input") {
    REQUIRE(code_of([] { ingest_document("\xff\xfe", "a.txt", DocFormat::Plain); }) ==
            errc::invalid_text);
    REQUIRE(code_of([] { ingest_document("", "a.txt", DocFormat::Plain); }) ==
            errc::invalid_argument);
    REQUIRE(code_of([] { ingest_document("x", "", DocFormat::Plain); }) == errc::invalid_filename);
    REQUIRE(code_of([] { ingest_document("x", "a/b.txt", DocFormat::Plain); }) ==
            errc::invalid_filename);
    REQUIRE(code_of([] { ingest_document("x", "a\\b.txt", DocFormat::Plain); }) ==
            errc::invalid_filename);
}

TEST_CASE("package wire format is bit-exact") {
    const std::string p = package("x");
    REQUIRE(p.size() == 14);
    REQUIRE(p.substr(0, 4) == "RPKG");
    REQUIRE(static_cast<unsigned char>(p[4]) == 0x01);
    for (std::size_t i = 5; i < 12; ++i) REQUIRE(p[i] == '\0');
    REQUIRE(static_cast<unsigned char>(p[12]) == 1);
    REQUIRE(p[13] == 'x');
}

TEST_CASE("package requires non-empty payload") {
    REQUIRE(code_of([] { package(""); }) == errc::empty_payload);
}

TEST_CASE("unpackage error taxonomy") {
    REQUIRE(unpackage(package("hello")) == "hello");
    REQUIRE(code_of([] { unpackage("NOPE\x01xxxxxxxx?"); }) == errc::bad_magic);
    REQUIRE(code_of([] { unpackage("RP"); }) == errc::bad_magic);
    REQUIRE(code_of([] { unpackage("RPKG"); }) == errc::length_mismatch);
    REQUIRE(code_of([] { unpackage(std::string("RPKG\x02", 5)); }) == errc::unsupported_version);
    REQUIRE(code_of([] { unpackage(std::string("RPKG\x01\x00\x00\x00", 9)); }) ==
            errc::length_mismatch);  // truncated length field
    std::string short_payload = package("hello");
    short_payload.pop_back();
    REQUIRE(code_of([&] { unpackage(short_payload); }) == errc::length_mismatch);
    const std::string long_payload = package("hello") + "extra";
    REQUIRE(code_of([&] { unpackage(long_payload); }) == errc::length_mismatch);
    std::string bad_text = package("ab");
    bad_text[kPackageHeaderSize] = '\xff';
    bad_text[kPackageHeaderSize + 1] = '\xfe';
    REQUIRE(code_of([&] { unpackage(bad_text); }) == errc::invalid_text);
}

TEST_CASE("package round trip holds for arbitrary text") {
    std::mt19937_64 rng(20240811);
    for (int i = 0; i < 200; ++i) {
        std::string t;
        const std::size_t n = 1 + rng() % 64;
        for (std::size_t j = 0; j < n; ++j) {
            switch (rng() % 4) {
                case 0: t += static_cast<char>('a' + rng() % 26); break;
                case 1: t += ' '; break;
                case 2: text::append_utf8(t, 0xE9); break;     // e-acute
                default: text::append_utf8(t, 0x65E5); break;  // CJK
            }
        }
        REQUIRE(unpackage(package(t)) == t);
    }
}

TEST_CASE("segmentation matches the stride rule") {
    Document doc{"d", "d", DocFormat::Plain, "abcdef", ""};
    REQUIRE(segment_texts(segment_document(doc, 3, 0)) == std::vector<std::string>{"abc", "def"});
    REQUIRE(segment_texts(segment_document(doc, 4, 2)) == std::vector<std::string>{"abcd", "cdef"});
    Document two{"d", "d", DocFormat::Plain, "ab", ""};
    REQUIRE(segment_texts(segment_document(two, 3, 1)) == std::vector<std::string>{"ab"});
}

TEST_CASE("segmentation counts scalar values, not bytes") {
    std::string body;
    for (int i = 0; i < 5; ++i) text::append_utf8(body, 0x65E5 + i);  // 5 cps, 15 bytes
    Document doc{"d", "d", DocFormat::Plain, body, ""};
    auto segs = segment_document(doc, 2, 0);
    REQUIRE(segs.size() == 3);
    REQUIRE(segs[0].start == 0);
    REQUIRE(segs[0].end == 2);
    REQUIRE(segs[2].start == 4);
    REQUIRE(segs[2].end == 5);
    REQUIRE(text::cp_length(segs[0].text) == 2);
    REQUIRE(text::cp_length(segs[2].text) == 1);
    REQUIRE(segs[0].text + segs[1].text + segs[2].text == body);
}

TEST_CASE("segmentation rejects bad parameters") {
    Document doc{"d", "d", DocFormat::Plain, "abc", ""};
    REQUIRE(code_of([&] { segment_document(doc, 0, 0); }) == errc::invalid_argument);
    REQUIRE(code_of([&] { segment_document(doc, 3, 3); }) == errc::invalid_argument);
}

TEST_CASE("segmentation coverage property") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t len = 1 + rng() % 300;
        std::string body;
        for (std::size_t i = 0; i < len; ++i) body += static_cast<char>('a' + rng() % 26);
        const std::size_t chunk = 1 + rng() % 50;
        const std::size_t overlap = chunk == 1 ? 0 : rng() % chunk;
        Document doc{"d", "d", DocFormat::Plain, body, ""};
        auto segs = segment_document(doc, chunk, overlap);
        REQUIRE_FALSE(segs.empty());
        REQUIRE(segs.front().start == 0);
        REQUIRE(segs.back().end == len);
        for (std::size_t i = 0; i < segs.size(); ++i) {
            REQUIRE(segs[i].index == i);
            REQUIRE(segs[i].text == body.substr(segs[i].start, segs[i].end - segs[i].start));
            if (i > 0) {
                REQUIRE(segs[i].start > segs[i - 1].start);
                REQUIRE(segs[i].start <= segs[i - 1].end);  // no gaps
            }
        }
        if (overlap == 0) {
            std::string joined;
            for (const auto& s : segs) joined += s.text;
            REQUIRE(joined == body);
        }
    }
}

TEST_CASE("knowledge base orders by filename and rejects duplicates") {
    KnowledgeBase kb;
    kb.add(ingest_document("b", "b.txt", DocFormat::Plain));
    kb.add(ingest_document("a", "a.txt", DocFormat::Plain));
    kb.add(ingest_document("z", "Z.txt", DocFormat::Plain));  // 'Z' < 'a' byte-wise
    std::vector<std::string> names;
    for (const auto& [name, doc] : kb.documents()) names.push_back(name);
    REQUIRE(names == std::vector<std::string>{"Z.txt", "a.txt", "b.txt"});

    std::vector<std::string> again;
    for (const auto& [name, doc] : kb.documents()) again.push_back(name);
    REQUIRE(again == names);

    REQUIRE(code_of([&] { kb.add(ingest_document("a2", "a.txt", DocFormat::Plain)); }) ==
            errc::duplicate_filename);
}

TEST_CASE("knowledge base loads from a directory") {
    const fs::path dir = fs::temp_directory_path() / "ragpoison_corpus_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_file_bytes(dir / "notes.txt", "plain body");
    write_file_bytes(dir / "topic.pkg", package("packaged body"));

    KnowledgeBase kb = load_knowledge_base(dir);
    REQUIRE(kb.size() == 2);
    REQUIRE(kb.at("notes.txt").format == DocFormat::Plain);
    REQUIRE(kb.at("notes.txt").body == "plain body");
    REQUIRE(kb.at("topic.pkg").format == DocFormat::Packaged);
    REQUIRE(kb.at("topic.pkg").body == "packaged body");
    fs::remove_all(dir);
}
