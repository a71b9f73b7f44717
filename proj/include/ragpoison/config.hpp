#pragma once

// Line-oriented "[section]" / "key = value" configuration format shared by
// the experiment, profile, and payload files. '#' starts a comment, blank
// lines are ignored, repeated keys are preserved in order. Entries before
// the first section header live in an unnamed section.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragpoison/corpus.hpp"
#include "ragpoison/errors.hpp"
#include "ragpoison/text.hpp"

namespace ragpoison {

class ConfigFile {
public:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;

        const std::string* find(std::string_view key) const {
            for (const auto& [k, v] : entries) {
                if (k == key) return &v;
            }
            return nullptr;
        }

        std::vector<std::string> all(std::string_view key) const {
            std::vector<std::string> out;
            for (const auto& [k, v] : entries) {
                if (k == key) out.push_back(v);
            }
            return out;
        }
    };

    static ConfigFile parse(std::string_view content) {
        ConfigFile cfg;
        cfg.sections_.push_back({"", {}});
        std::size_t pos = 0;
        std::size_t line_no = 0;
        while (pos <= content.size()) {
            std::size_t nl = content.find('\n', pos);
            std::string_view line =
                content.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
            pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
            ++line_no;
            line = text::trim(line);
            if (line.empty() || line.front() == '#') continue;
            if (line.front() == '[') {
                if (line.back() != ']' || line.size() < 3) {
                    raise(errc::invalid_config,
                          "malformed section header on line " + std::to_string(line_no));
                }
                cfg.sections_.push_back({std::string(text::trim(line.substr(1, line.size() - 2))), {}});
                continue;
            }
            std::size_t eq = line.find('=');
            if (eq == std::string_view::npos) {
                raise(errc::invalid_config,
                      "expected 'key = value' on line " + std::to_string(line_no));
            }
            std::string key(text::trim(line.substr(0, eq)));
            std::string value(text::trim(line.substr(eq + 1)));
            if (key.empty()) {
                raise(errc::invalid_config, "empty key on line " + std::to_string(line_no));
            }
            cfg.sections_.back().entries.emplace_back(std::move(key), std::move(value));
        }
        return cfg;
    }

    static ConfigFile load(const std::filesystem::path& path) {
        return parse(read_file_bytes(path));
    }

    const std::vector<Section>& sections() const { return sections_; }

    const Section* find_section(std::string_view name) const {
        for (const auto& s : sections_) {
            if (s.name == name) return &s;
        }
        return nullptr;
    }

private:
    std::vector<Section> sections_;
};

inline std::uint64_t parse_u64(std::string_view value, std::string_view what) {
    std::uint64_t out = 0;
    if (value.empty()) raise(errc::invalid_config, std::string(what) + " is empty");
    for (char c : value) {
        if (c < '0' || c > '9') {
            raise(errc::invalid_config, std::string(what) + " is not an unsigned integer: " + std::string(value));
        }
        out = out * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return out;
}

inline double parse_double(std::string_view value, std::string_view what) {
    try {
        std::size_t consumed = 0;
        double out = std::stod(std::string(value), &consumed);
        if (consumed != value.size()) throw std::invalid_argument("trailing garbage");
        return out;
    } catch (const std::exception&) {
        raise(errc::invalid_config, std::string(what) + " is not a number: " + std::string(value));
    }
}

}  // namespace ragpoison
