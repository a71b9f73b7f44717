#pragma once

// Command implementations behind the ragpoison binary: build-kb, poison,
// attack, run-experiment. Non-interactive, exit-code disciplined; a failed
// run-experiment leaves no run directory behind.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ragpoison/defaults.hpp"
#include "ragpoison/harness.hpp"

namespace ragpoison::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitRefused = 2;

// --- build-kb ----------------------------------------------------------------

struct BuildKbOptions {
    fs::path source_dir;
    fs::path out_dir;
    std::optional<fs::path> lexicon_file;
};

// Ingests every regular file of the source directory, runs the ingestion
// scan, copies accepted documents into the output directory, and writes
// scan-log.txt with one ACCEPT/REJECT/ERROR line per file.
inline int cmd_build_kb(const BuildKbOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        if (!fs::is_directory(opt.source_dir)) {
            err << "error: '" << opt.source_dir.string() << "' is not a directory\n";
            return kExitError;
        }
        if (fs::exists(opt.out_dir)) {
            err << "error: output directory '" << opt.out_dir.string() << "' already exists\n";
            return kExitError;
        }
        const SafetyLexicon lexicon = opt.lexicon_file
                                          ? SafetyLexicon::from_file(*opt.lexicon_file)
                                          : default_lexicon();
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(opt.source_dir)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());

        fs::create_directories(opt.out_dir);
        std::string log;
        int accepted = 0, rejected = 0, errors = 0;
        for (const auto& path : files) {
            const std::string name = path.filename().string();
            try {
                const std::string raw = read_file_bytes(path);
                const DocFormat format = format_for_filename(path);
                ingest_document(raw, name, format);  // validates decodability
                const ScanResult scan = ingestion_scan(raw, format, lexicon);
                if (scan.accepted) {
                    write_file_bytes(opt.out_dir / name, raw);
                    log += "ACCEPT " + name + "\n";
                    ++accepted;
                } else {
                    log += "REJECT " + name + " category=" + category_name(*scan.category) + "\n";
                    ++rejected;
                }
            } catch (const Error& e) {
                log += "ERROR " + name + " " + e.what() + "\n";
                ++errors;
            }
        }
        log += "accepted=" + std::to_string(accepted) + " rejected=" + std::to_string(rejected) +
               " errors=" + std::to_string(errors) + "\n";
        write_file_bytes(opt.out_dir / "scan-log.txt", log);
        out << log;
        return errors == 0 ? kExitOk : kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// --- poison ---------------------------------------------------------------------

struct PoisonOptions {
    std::optional<fs::path> config;  // defaults when absent
    std::string scenario;            // topic name; optional if config has one scenario
    fs::path out_dir;
    std::optional<std::size_t> target_length;
};

inline const Scenario& pick_scenario(const std::vector<Scenario>& scenarios,
                                     const std::string& name) {
    if (name.empty()) {
        if (scenarios.size() == 1) return scenarios.front();
        std::string available;
        for (const auto& s : scenarios) available += " " + s.topic;
        raise(errc::invalid_argument, "multiple scenarios configured, pass --scenario; available:" + available);
    }
    for (const auto& s : scenarios) {
        if (s.topic == name || text::fold_ascii(category_name(s.category)) == text::fold_ascii(name)) {
            return s;
        }
    }
    raise(errc::invalid_argument, "no scenario named '" + name + "'");
}

// Emits <topic>.pkg, the trigger prompt, and a transformation audit.
inline int cmd_poison(const PoisonOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        if (fs::exists(opt.out_dir)) {
            err << "error: output directory '" << opt.out_dir.string() << "' already exists\n";
            return kExitError;
        }
        const ExperimentConfig config =
            opt.config ? load_experiment_config(*opt.config) : default_experiment_config();
        const Scenario& scenario = pick_scenario(config.scenarios, opt.scenario);
        const std::size_t target_length =
            opt.target_length.value_or(scenario.payload_target_length);

        const std::string raw_payload = generate_payload(scenario.payload, target_length);
        const std::string substituted = substitute_keywords(raw_payload, scenario.substitution);
        const std::string final_body = blacklist_filter(substituted, scenario.blacklist);
        const Document doc = build_poison_document(scenario.payload, scenario.substitution,
                                                   scenario.blacklist, target_length);
        const std::string snippet =
            marker_core(scenario.payload.marker_sentences.front(), scenario.substitution);
        const std::string prompt = craft_trigger_prompt(scenario.topic, snippet);

        std::string audit;
        audit += "scenario: " + scenario.topic + "\n";
        audit += "category: " + std::string(category_name(scenario.category)) + "\n";
        audit += "canary: " + scenario.payload.canary_token + "\n";
        audit += "payload_chars_raw: " + std::to_string(text::cp_length(raw_payload)) + "\n";
        audit += "payload_chars_final: " + std::to_string(text::cp_length(final_body)) + "\n";
        std::size_t residual = 0;
        for (const auto& [sensitive, subtle] : scenario.substitution.pairs()) {
            audit += "substitution: " + sensitive + "=>" + subtle +
                     " hits=" + std::to_string(text::count_word(raw_payload, sensitive)) + "\n";
            residual += text::count_word(final_body, sensitive);
        }
        const std::size_t raw_sentences = text::split_sentences(substituted).size();
        const std::size_t kept_sentences = text::split_sentences(final_body).size();
        audit += "blacklist_dropped_sentences: " + std::to_string(raw_sentences - kept_sentences) + "\n";
        audit += "residual_sensitive_terms: " + std::to_string(residual) + "\n";
        std::size_t canary_count = 0;
        for (std::size_t pos = final_body.find(scenario.payload.canary_token);
             pos != std::string::npos;
             pos = final_body.find(scenario.payload.canary_token,
                                   pos + scenario.payload.canary_token.size())) {
            ++canary_count;
        }
        audit += "canary_occurrences: " + std::to_string(canary_count) + "\n";

        fs::create_directories(opt.out_dir);
        write_file_bytes(opt.out_dir / doc.filename, package(doc.body));
        write_file_bytes(opt.out_dir / "prompt.txt", prompt + "\n");
        write_file_bytes(opt.out_dir / "audit.txt", audit);
        out << audit;
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// --- attack -----------------------------------------------------------------------

struct AttackOptions {
    fs::path kb_dir;
    std::string query;
    std::string profile = "lax";
    std::uint64_t seed = 0;
    std::size_t k = kDefaultTopK;
    std::optional<std::string> topic;
    std::optional<std::string> category;
    std::optional<fs::path> config;
    std::optional<fs::path> lexicon_file;
    bool trace = false;
};

inline StrictnessProfile resolve_profile(const std::string& name,
                                         const std::optional<fs::path>& config_path) {
    if (config_path) {
        const ExperimentConfig config = load_experiment_config(*config_path);
        if (config.lax.name == name) return config.lax;
        if (config.strict.name == name) return config.strict;
    }
    if (name == "lax") return lax_profile();
    if (name == "strict") return strict_profile();
    raise(errc::invalid_argument, "unknown profile '" + name + "'");
}

// Single-shot query against a knowledge-base directory. Exit 0 on a
// non-refused response, 2 on refusal, 1 on errors.
inline int cmd_attack(const AttackOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        GPTInstance instance;
        instance.kb = load_knowledge_base(opt.kb_dir);
        if (instance.kb.empty()) {
            err << "error: knowledge base '" << opt.kb_dir.string() << "' is empty\n";
            return kExitError;
        }
        instance.lexicon = opt.lexicon_file ? SafetyLexicon::from_file(*opt.lexicon_file)
                                            : default_lexicon();
        instance.profile = resolve_profile(opt.profile, opt.config);
        instance.k = opt.k;
        instance.rng_seed = opt.seed;
        if (opt.category) instance.scenario = parse_category(*opt.category);

        std::string topic = opt.topic.value_or("");
        if (topic.empty()) {
            for (const auto& [filename, doc] : instance.kb.documents()) {
                if (doc.format == DocFormat::Packaged) {
                    topic = filename_stem(filename);
                    break;
                }
            }
            if (topic.empty()) topic = filename_stem(instance.kb.documents().begin()->first);
        }
        instance.system_prompt = craft_trigger_prompt(topic);

        const Response response = answer(instance, opt.query, /*trial_nonce=*/0);
        out << response.text << "\n";
        if (opt.trace) {
            out << "--- trace ---\n";
            out << "selected: " << response.trace.selected_filename << "\n";
            for (const auto& ref : response.trace.ranked) {
                out << "[[SEG " << ref.doc_id << ":" << ref.index
                    << " score=" << format_score(ref.score) << "]]\n";
            }
        }
        return response.refused ? kExitRefused : kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// --- run-experiment ------------------------------------------------------------------

struct RunExperimentOptions {
    std::optional<fs::path> config;  // defaults when absent
    fs::path out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
    std::optional<std::size_t> k;
    ReportFormat format = ReportFormat::Table;
};

// Runs the full protocol and writes report.txt, report.csv, trials.csv,
// config-echo.txt, and manifest.txt into a fresh run directory. The
// directory appears atomically: files are staged and renamed into place.
inline int cmd_run_experiment(const RunExperimentOptions& opt, std::ostream& out,
                              std::ostream& err) {
    fs::path staging;
    try {
        if (fs::exists(opt.out_dir)) {
            err << "error: run directory '" << opt.out_dir.string() << "' already exists\n";
            return kExitError;
        }
        ExperimentConfig config =
            opt.config ? load_experiment_config(*opt.config) : default_experiment_config();
        if (opt.seed) config.seed = *opt.seed;
        if (opt.iterations) config.iterations = *opt.iterations;
        if (opt.k) config.k = *opt.k;
        config.validate();

        const std::vector<TrialResult> results = run_experiment(config);
        const SuccessReport report = aggregate(results, metadata_for(config));
        const std::string table = render_report(report, ReportFormat::Table);
        const std::string csv = render_report(report, ReportFormat::Csv);
        const std::string trials = render_trials_csv(results);
        const std::string echo = render_config_echo(config);

        staging = opt.out_dir;
        staging += ".partial";
        fs::remove_all(staging);
        fs::create_directories(staging);
        write_file_bytes(staging / "report.txt", table);
        write_file_bytes(staging / "report.csv", csv);
        write_file_bytes(staging / "trials.csv", trials);
        write_file_bytes(staging / "config-echo.txt", echo);
        write_file_bytes(staging / "manifest.txt",
                         "config-echo.txt\nmanifest.txt\nreport.csv\nreport.txt\ntrials.csv\n");
        fs::rename(staging, opt.out_dir);

        out << (opt.format == ReportFormat::Table ? table : csv);
        return kExitOk;
    } catch (const std::exception& e) {
        if (!staging.empty()) {
            std::error_code ec;
            fs::remove_all(staging, ec);
        }
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace ragpoison::cli
