#pragma once

// Document model and storage: ingestion of plain and packaged files,
// segmentation measured in Unicode scalar values, the RPKG container
// codec, and the filename-ordered knowledge base.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ragpoison/errors.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

enum class DocFormat { Plain, Packaged };

inline constexpr std::size_t kDefaultChunkSize = 200;
inline constexpr std::size_t kDefaultOverlap = 40;

struct Document {
    std::string id;          // equals the filename
    std::string filename;
    DocFormat format = DocFormat::Plain;
    std::string body;        // UTF-8; already unpackaged for Packaged docs
    std::string topic_label;
};

struct Segment {
    std::string doc_id;
    std::size_t index = 0;
    std::string text;
    std::size_t start = 0;   // half-open [start, end) in Unicode scalar values
    std::size_t end = 0;
};

// --- RPKG container -------------------------------------------------------
//
// Wire format: bytes 0-3 ASCII "RPKG", byte 4 version 0x01, bytes 5-12
// payload length as big-endian u64, then exactly that many bytes of UTF-8
// payload.

inline constexpr std::string_view kPackageMagic = "RPKG";
inline constexpr unsigned char kPackageVersion = 0x01;
inline constexpr std::size_t kPackageHeaderSize = 13;

inline std::string package(std::string_view text) {
    if (text.empty()) raise(errc::empty_payload, "package() requires non-empty text");
    std::string out;
    out.reserve(kPackageHeaderSize + text.size());
    out.append(kPackageMagic);
    out.push_back(static_cast<char>(kPackageVersion));
    std::uint64_t len = text.size();
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<char>((len >> shift) & 0xFF));
    }
    out.append(text);
    return out;
}

inline std::string unpackage(std::string_view raw) {
    if (raw.size() < kPackageMagic.size() ||
        raw.substr(0, kPackageMagic.size()) != kPackageMagic) {
        raise(errc::bad_magic, "not an RPKG container");
    }
    if (raw.size() < 5) raise(errc::length_mismatch, "container truncated before version");
    unsigned char version = static_cast<unsigned char>(raw[4]);
    if (version != kPackageVersion) {
        raise(errc::unsupported_version,
              "container version " + std::to_string(version));
    }
    if (raw.size() < kPackageHeaderSize) {
        raise(errc::length_mismatch, "container truncated in length field");
    }
    std::uint64_t len = 0;
    for (std::size_t i = 5; i < kPackageHeaderSize; ++i) {
        len = (len << 8) | static_cast<unsigned char>(raw[i]);
    }
    if (raw.size() - kPackageHeaderSize != len) {
        raise(errc::length_mismatch,
              "declared payload length " + std::to_string(len) + ", found " +
                  std::to_string(raw.size() - kPackageHeaderSize) + " bytes");
    }
    std::string_view payload = raw.substr(kPackageHeaderSize);
    if (!text::valid_utf8(payload)) raise(errc::invalid_text, "payload is not valid UTF-8");
    return std::string(payload);
}

// --- Ingestion ------------------------------------------------------------

inline bool valid_filename(std::string_view filename) {
    if (filename.empty()) return false;
    return filename.find('/') == std::string_view::npos &&
           filename.find('\\') == std::string_view::npos;
}

inline Document ingest_document(std::string_view raw, std::string filename,
                                DocFormat format) {
    if (raw.empty()) raise(errc::invalid_argument, "raw document content is empty");
    if (!valid_filename(filename)) {
        raise(errc::invalid_filename, "filename '" + filename + "' is empty or contains a path separator");
    }
    Document doc;
    doc.filename = filename;
    doc.id = std::move(filename);
    doc.format = format;
    if (format == DocFormat::Plain) {
        if (!text::valid_utf8(raw)) {
            raise(errc::invalid_text, "plain document '" + doc.filename + "' is not valid UTF-8");
        }
        doc.body = std::string(raw);
    } else {
        doc.body = unpackage(raw);
    }
    return doc;
}

// --- Segmentation ---------------------------------------------------------

// Windows of `chunk_size` scalar values advancing by chunk_size - overlap.
// Segment i covers [i*stride, min(i*stride + chunk_size, len)); the first
// window reaching the end of the body is the last one emitted.
inline std::vector<Segment> segment_document(const Document& doc,
                                             std::size_t chunk_size = kDefaultChunkSize,
                                             std::size_t overlap = kDefaultOverlap) {
    if (chunk_size < 1) raise(errc::invalid_argument, "chunk_size must be >= 1");
    if (overlap >= chunk_size) raise(errc::invalid_argument, "overlap must be < chunk_size");
    std::vector<Segment> segments;
    const auto offsets = text::utf8_offsets(doc.body);
    const std::size_t len = offsets.size() - 1;
    if (len == 0) return segments;
    const std::size_t stride = chunk_size - overlap;
    for (std::size_t i = 0;; ++i) {
        const std::size_t start = i * stride;
        const std::size_t end = std::min(start + chunk_size, len);
        Segment seg;
        seg.doc_id = doc.id;
        seg.index = i;
        seg.start = start;
        seg.end = end;
        seg.text = doc.body.substr(offsets[start], offsets[end] - offsets[start]);
        segments.push_back(std::move(seg));
        if (start + chunk_size >= len) break;
    }
    return segments;
}

// --- Knowledge base -------------------------------------------------------

// Documents keyed by filename; iteration is byte-wise lexicographic and
// stable. Construction is single-writer; a built KB is read-only.
class KnowledgeBase {
public:
    void add(Document doc) {
        auto [it, inserted] = docs_.emplace(doc.filename, std::move(doc));
        if (!inserted) {
            raise(errc::duplicate_filename, "filename '" + it->first + "' already present");
        }
    }

    const std::map<std::string, Document>& documents() const { return docs_; }
    bool empty() const { return docs_.empty(); }
    std::size_t size() const { return docs_.size(); }

    const Document& at(const std::string& filename) const {
        auto it = docs_.find(filename);
        if (it == docs_.end()) raise(errc::invalid_argument, "no document named '" + filename + "'");
        return it->second;
    }

private:
    std::map<std::string, Document> docs_;
};

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open '" + path.string() + "'");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) raise(errc::io_error, "failed reading '" + path.string() + "'");
    return data;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(errc::io_error, "cannot create '" + path.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) raise(errc::io_error, "failed writing '" + path.string() + "'");
}

inline DocFormat format_for_filename(const std::filesystem::path& filename) {
    return filename.extension() == ".pkg" ? DocFormat::Packaged : DocFormat::Plain;
}

// Loads every regular file of a directory as one document; ".pkg" files
// are unpackaged, everything else is raw UTF-8.
inline KnowledgeBase load_knowledge_base(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        raise(errc::io_error, "'" + dir.string() + "' is not a directory");
    }
    KnowledgeBase kb;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        std::string raw = read_file_bytes(path);
        kb.add(ingest_document(raw, path.filename().string(), format_for_filename(path)));
    }
    return kb;
}

}  // namespace ragpoison
