#pragma once

#include <stdexcept>
#include <string>

namespace ragpoison {

// Every failure mode the library reports. CLI commands map these onto
// exit codes; tests match on them.
enum class errc {
    invalid_text,
    invalid_filename,
    duplicate_filename,
    empty_payload,
    bad_magic,
    unsupported_version,
    length_mismatch,
    empty_knowledge_base,
    target_too_small,
    all_content_filtered,
    empty_results,
    invalid_config,
    invalid_argument,
    io_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_text: return "InvalidText";
        case errc::invalid_filename: return "InvalidFilename";
        case errc::duplicate_filename: return "DuplicateFilename";
        case errc::empty_payload: return "EmptyPayload";
        case errc::bad_magic: return "BadMagic";
        case errc::unsupported_version: return "UnsupportedVersion";
        case errc::length_mismatch: return "LengthMismatch";
        case errc::empty_knowledge_base: return "EmptyKnowledgeBase";
        case errc::target_too_small: return "TargetTooSmall";
        case errc::all_content_filtered: return "AllContentFiltered";
        case errc::empty_results: return "EmptyResults";
        case errc::invalid_config: return "InvalidConfig";
        case errc::invalid_argument: return "InvalidArgument";
        case errc::io_error: return "IoError";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace ragpoison
