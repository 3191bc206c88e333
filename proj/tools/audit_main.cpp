// audit: negation-sensitivity audit harness CLI.
//
// Subcommands: run, analyze, certify, report, consensus.
// Exit codes: 0 success, 2 partial run (failed cells listed in the
// manifest), 3 configuration or input error, 4 auth error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "nsa/errors.hpp"
#include "nsa/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 2;
constexpr int kExitConfig = 3;
constexpr int kExitAuth = 4;

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> providers;
    std::optional<int> samples;
    std::optional<double> temperature;
    std::vector<double> ablation;
    std::optional<std::string> out;
    std::optional<std::string> thresholds;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> corpus;
    std::optional<std::string> envelope;
};

// Precedence: command line > config file > defaults.
nsa::RunConfig resolve_config(const CommonFlags& flags) {
    nsa::RunConfig cfg;
    if (!flags.config_path.empty()) cfg = nsa::load_run_config(flags.config_path);
    if (!flags.providers.empty()) {
        cfg.providers.clear();
        for (const std::string& spec : flags.providers)
            cfg.providers.push_back(nsa::parse_provider_spec(spec));
    }
    if (flags.samples) cfg.sampling.samples_per_cell = *flags.samples;
    if (flags.temperature) cfg.sampling.temperature = *flags.temperature;
    if (!flags.ablation.empty()) cfg.ablation_temperatures = flags.ablation;
    if (flags.out) cfg.out_dir = *flags.out;
    if (flags.thresholds) cfg.thresholds_path = *flags.thresholds;
    if (flags.seed) cfg.sampling.seed = *flags.seed;
    if (flags.corpus) cfg.corpus_path = *flags.corpus;
    if (flags.envelope) cfg.envelope_version = *flags.envelope;
    return cfg;
}

nsa::TierThresholds resolve_thresholds(const std::string& path) {
    return path.empty() ? nsa::TierThresholds::defaults() : nsa::TierThresholds::load(path);
}

int cmd_run(const CommonFlags& flags) {
    nsa::RunConfig cfg = resolve_config(flags);
    try {
        nsa::RunManifest manifest = nsa::pipeline_run(cfg);
        std::cout << "run " << manifest.run_id << ": " << manifest.persisted << "/"
                  << manifest.planned << " completions persisted, 0 failed\n";
        std::cout << "run directory: " << cfg.out_dir << "\n";
        return kExitOk;
    } catch (const nsa::PartialRunError& e) {
        std::cerr << "partial run: " << e.what() << "\n";
        return kExitPartial;
    }
}

int cmd_analyze(const std::string& run_dir, const std::string& ablation_dir_flag) {
    std::optional<fs::path> ablation;
    if (!ablation_dir_flag.empty()) ablation = fs::path(ablation_dir_flag);
    else {
        const fs::path twin = nsa::ablation_dir(run_dir, 0.0);
        if (fs::exists(twin / "manifest")) ablation = twin;
    }
    nsa::AuditBundle bundle = nsa::pipeline_analyze(run_dir, ablation);
    nsa::write_analysis_files(bundle, run_dir);
    std::cout << "analyzed " << bundle.records.size() << " valid trials ("
              << bundle.filter.n_input - bundle.filter.n_kept << " dropped)\n";
    for (const auto& r : bundle.model_nsi)
        std::cout << "model " << r.model << ": NSI " << nsa::fmt4(r.nsi) << " (macro "
                  << nsa::fmt4(bundle.macro_nsi.at(r.model)) << ")\n";
    std::cout << "significant framing effects: " << bundle.significance.n_significant << "/"
              << bundle.significance.n_testable << " pairs\n";
    std::cout << "analysis files: " << (fs::path(run_dir) / "analysis").string() << "\n";
    return kExitOk;
}

int cmd_certify(const std::string& run_dir, const std::string& thresholds_path) {
    nsa::AuditBundle bundle = nsa::pipeline_analyze(run_dir);
    nsa::pipeline_certify(bundle, resolve_thresholds(thresholds_path), run_dir);
    for (const auto& c : bundle.certifications)
        std::cout << "model " << c.model << ": overall Tier " << nsa::tier_name(c.overall_tier)
                  << " (worst case " << c.worst_scenario_id << " at "
                  << nsa::fmt4(c.worst_scenario_nsi) << ")\n";
    std::cout << "certification files: " << (fs::path(run_dir) / "certification").string() << "\n";
    return kExitOk;
}

int cmd_report(const std::string& run_dir, const std::string& thresholds_path,
               const std::string& ablation_dir_flag) {
    std::optional<fs::path> ablation;
    if (!ablation_dir_flag.empty()) ablation = fs::path(ablation_dir_flag);
    else {
        const fs::path twin = nsa::ablation_dir(run_dir, 0.0);
        if (fs::exists(twin / "manifest")) ablation = twin;
    }
    nsa::AuditBundle bundle = nsa::pipeline_analyze(run_dir, ablation);
    nsa::pipeline_certify(bundle, resolve_thresholds(thresholds_path), run_dir);
    nsa::AuditReport report = nsa::pipeline_report(bundle, run_dir);
    std::cout << "report for run " << report.run_id << ": " << report.files.size()
              << " files under " << (fs::path(run_dir) / "report").string() << "\n";
    return kExitOk;
}

int cmd_consensus(const CommonFlags& flags, const std::string& provider_spec,
                  const std::string& scenario_id, int samples_per_side, bool compound) {
    nsa::RunConfig cfg = resolve_config(flags);
    const std::vector<nsa::Scenario> corpus = nsa::load_corpus(cfg.corpus_path);
    const nsa::Scenario* scenario = nullptr;
    for (const nsa::Scenario& s : corpus)
        if (s.id == scenario_id) scenario = &s;
    if (!scenario) throw nsa::ValidationError("scenario '" + scenario_id + "' not in corpus");

    auto provider = nsa::make_provider(nsa::parse_provider_spec(provider_spec));
    nsa::ConsensusResult res = nsa::consensus_check(*provider, *scenario, cfg.sampling,
                                                    samples_per_side, compound,
                                                    cfg.envelope_version);
    std::cout << "consensus for " << provider->config().name << " on " << scenario_id << ": "
              << nsa::consensus_verdict_name(res.verdict) << "\n";
    for (const nsa::ConsensusSide& side : res.sides)
        std::cout << "  " << nsa::framing_name(side.framing) << ": " << side.n_endorse << "/"
                  << side.n_valid << " endorse, majority "
                  << (side.majority < 0 ? "tie/none" : std::to_string(side.majority)) << "\n";
    return res.verdict == nsa::ConsensusVerdict::inconsistent ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Negation-sensitivity audit harness"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string run_dir, thresholds_path, ablation_dir_flag;
    std::string provider_spec, scenario_id;
    int samples_per_side = 5;
    bool compound = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", flags.config_path, "Config file");
        cmd->add_option("--providers", flags.providers, "Provider specs")->delimiter(',');
        cmd->add_option("--samples", flags.samples, "Samples per cell");
        cmd->add_option("--temperature", flags.temperature, "Sampling temperature");
        cmd->add_option("--ablation", flags.ablation, "Ablation temperature(s)");
        cmd->add_option("--out", flags.out, "Run output directory");
        cmd->add_option("--thresholds", flags.thresholds, "Thresholds config file");
        cmd->add_option("--seed", flags.seed, "Sampling seed");
        cmd->add_option("--corpus", flags.corpus, "Corpus file");
        cmd->add_option("--envelope", flags.envelope, "Elicitation envelope version");
    };

    CLI::App* run = app.add_subcommand("run", "Execute the sampling plan");
    add_common(run);

    CLI::App* analyze = app.add_subcommand("analyze", "Compute metrics and significance");
    analyze->add_option("run_dir", run_dir, "Run directory")->required();
    analyze->add_option("--ablation-dir", ablation_dir_flag, "Greedy twin run directory");

    CLI::App* certify = app.add_subcommand("certify", "Tier certification");
    certify->add_option("run_dir", run_dir, "Run directory")->required();
    certify->add_option("--thresholds", thresholds_path, "Thresholds config file");

    CLI::App* report = app.add_subcommand("report", "Emit the full report tree");
    report->add_option("run_dir", run_dir, "Run directory")->required();
    report->add_option("--thresholds", thresholds_path, "Thresholds config file");
    report->add_option("--ablation-dir", ablation_dir_flag, "Greedy twin run directory");

    CLI::App* consensus = app.add_subcommand("consensus", "Two-polarity runtime check");
    consensus->add_option("provider", provider_spec, "Provider spec")->required();
    consensus->add_option("scenario", scenario_id, "Scenario id")->required();
    consensus->add_option("--samples", samples_per_side, "Samples per polarity side");
    consensus->add_flag("--compound", compound, "Also check the compound pair");
    consensus->add_option("-c,--config", flags.config_path, "Config file");
    consensus->add_option("--corpus", flags.corpus, "Corpus file");
    consensus->add_option("--seed", flags.seed, "Sampling seed");
    consensus->add_option("--temperature", flags.temperature, "Sampling temperature");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(flags);
        if (analyze->parsed()) return cmd_analyze(run_dir, ablation_dir_flag);
        if (certify->parsed()) return cmd_certify(run_dir, thresholds_path);
        if (report->parsed()) return cmd_report(run_dir, thresholds_path, ablation_dir_flag);
        if (consensus->parsed())
            return cmd_consensus(flags, provider_spec, scenario_id, samples_per_side, compound);
    } catch (const nsa::AuthError& e) {
        std::cerr << "auth error: " << e.what() << "\n";
        return kExitAuth;
    } catch (const nsa::PartialRunError& e) {
        std::cerr << "partial: " << e.what() << "\n";
        return kExitPartial;
    } catch (const nsa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
