// ragpoison command-line front end.
//
//   ragpoison build-kb --source DIR --out DIR [--lexicon FILE]
//   ragpoison poison [--config FILE] [--scenario NAME] --out DIR
//   ragpoison attack --kb DIR [--profile NAME] [--seed N] [--k N] [--trace] QUERY
//   ragpoison run-experiment [--config FILE] --out DIR [--seed N] [--iterations N]
//                            [--k N] [--format table|csv]

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ragpoison/cli.hpp"

int main(int argc, char** argv) {
    using namespace ragpoison;

    CLI::App app{"Deterministic testbed for RAG corpus-poisoning evaluation"};
    app.require_subcommand(1);

    cli::BuildKbOptions build_opt;
    std::string build_lexicon;
    auto* build = app.add_subcommand("build-kb", "Scan and ingest a document directory");
    build->add_option("--source", build_opt.source_dir, "Source document directory")->required();
    build->add_option("--out", build_opt.out_dir, "Output knowledge-base directory")->required();
    build->add_option("--lexicon", build_lexicon, "Lexicon file (default: built-in)");

    cli::PoisonOptions poison_opt;
    std::string poison_config;
    std::size_t poison_target_length = 0;
    auto* poison = app.add_subcommand("poison", "Build a poison document for a scenario");
    poison->add_option("--config", poison_config, "Experiment config file (default: built-in)");
    poison->add_option("--scenario", poison_opt.scenario, "Scenario topic or category");
    poison->add_option("--out", poison_opt.out_dir, "Output directory")->required();
    poison->add_option("--target-length", poison_target_length, "Payload length in characters");

    cli::AttackOptions attack_opt;
    std::string attack_config, attack_lexicon, attack_topic, attack_category;
    auto* attack = app.add_subcommand("attack", "Query a knowledge base once");
    attack->add_option("--kb", attack_opt.kb_dir, "Knowledge-base directory")->required();
    attack->add_option("--profile", attack_opt.profile, "Strictness profile (lax|strict)");
    attack->add_option("--seed", attack_opt.seed, "RNG seed");
    attack->add_option("--k", attack_opt.k, "Top-K segments to retrieve");
    attack->add_option("--topic", attack_topic, "Instance topic (default: first .pkg stem)");
    attack->add_option("--category", attack_category, "Scenario category for profile modifiers");
    attack->add_option("--config", attack_config, "Experiment config supplying profiles");
    attack->add_option("--lexicon", attack_lexicon, "Lexicon file (default: built-in)");
    attack->add_flag("--trace", attack_opt.trace, "Print selected file and top-K scores");
    attack->add_option("query", attack_opt.query, "User query")->required();

    cli::RunExperimentOptions run_opt;
    std::string run_config, run_format = "table";
    std::uint64_t run_seed = 0;
    int run_iterations = 0;
    std::size_t run_k = 0;
    auto* run = app.add_subcommand("run-experiment", "Run the full trial matrix");
    run->add_option("--config", run_config, "Experiment config file (default: built-in)");
    run->add_option("--out", run_opt.out_dir, "Run directory to create")->required();
    auto* seed_opt = run->add_option("--seed", run_seed, "Seed override");
    auto* iter_opt = run->add_option("--iterations", run_iterations, "Iterations override");
    auto* k_opt = run->add_option("--k", run_k, "Top-K override");
    run->add_option("--format", run_format, "Report format printed to stdout (table|csv)")
        ->check(CLI::IsMember({"table", "csv"}));

    CLI11_PARSE(app, argc, argv);

    if (build->parsed()) {
        if (!build_lexicon.empty()) build_opt.lexicon_file = build_lexicon;
        return cli::cmd_build_kb(build_opt, std::cout, std::cerr);
    }
    if (poison->parsed()) {
        if (!poison_config.empty()) poison_opt.config = poison_config;
        if (poison_target_length > 0) poison_opt.target_length = poison_target_length;
        return cli::cmd_poison(poison_opt, std::cout, std::cerr);
    }
    if (attack->parsed()) {
        if (!attack_config.empty()) attack_opt.config = attack_config;
        if (!attack_lexicon.empty()) attack_opt.lexicon_file = attack_lexicon;
        if (!attack_topic.empty()) attack_opt.topic = attack_topic;
        if (!attack_category.empty()) attack_opt.category = attack_category;
        return cli::cmd_attack(attack_opt, std::cout, std::cerr);
    }
    if (run->parsed()) {
        if (!run_config.empty()) run_opt.config = run_config;
        if (seed_opt->count() > 0) run_opt.seed = run_seed;
        if (iter_opt->count() > 0) run_opt.iterations = run_iterations;
        if (k_opt->count() > 0) run_opt.k = run_k;
        run_opt.format = run_format == "csv" ? ragpoison::ReportFormat::Csv
                                             : ragpoison::ReportFormat::Table;
        return cli::cmd_run_experiment(run_opt, std::cout, std::cerr);
    }
    return cli::kExitError;
}
