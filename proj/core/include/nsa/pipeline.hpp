#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsa/certify.hpp"
#include "nsa/gateway.hpp"
#include "nsa/report.hpp"
#include "nsa/scripted.hpp"

namespace nsa {

// One provider entry as declared in a config file or --providers flag.
struct ProviderSpec {
    std::string kind;  // "scripted" or "http"
    ProviderConfig http;
    ScriptedModelSpec scripted;
};

struct RunConfig {
    std::string corpus_path = "corpus/default_v1";
    std::vector<ProviderSpec> providers;
    SamplingConfig sampling;
    std::vector<double> ablation_temperatures;
    std::string out_dir;
    std::string thresholds_path;
    std::string envelope_version = "v1";
    double filter_floor = 0.8;
};

// Parses a config file (`key: value` lines plus [provider] blocks). CLI
// flags are applied on top by the caller: CLI > file > defaults.
RunConfig load_run_config(const std::string& path);

// Parses one --providers item, e.g. "scripted:mirror",
// "scripted:ceiling:deterministic" or "http:NAME:MODEL_ID:BASE_URL".
ProviderSpec parse_provider_spec(const std::string& spec);

std::unique_ptr<Provider> make_provider(const ProviderSpec& spec);

// Directory of the greedy ablation twin for a given run directory.
std::filesystem::path ablation_dir(const std::filesystem::path& run_dir, double temperature);

// run: executes the sampling plan (plus any ablation twins) into
// config.out_dir. Returns the primary manifest. PartialRunError propagates
// after the manifest is written.
RunManifest pipeline_run(const RunConfig& config);

// analyze: records -> parse -> filter -> normalize -> rates/NSI ->
// agreement -> significance. Does not certify. When an ablation twin
// directory exists next to the run (or is passed explicitly), the
// temperature-delta summary is filled in.
AuditBundle pipeline_analyze(const std::filesystem::path& run_dir,
                             const std::optional<std::filesystem::path>& ablation = std::nullopt,
                             double filter_floor = 0.8);

// certify: adds per-model certification reports to the bundle and writes
// certification.csv + disclosure files under <run_dir>/certification/.
void pipeline_certify(AuditBundle& bundle, const TierThresholds& thresholds,
                      const std::filesystem::path& run_dir);

// report: writes the full report tree under <run_dir>/report/.
AuditReport pipeline_report(const AuditBundle& bundle, const std::filesystem::path& run_dir);

// analysis files written by `analyze` under <run_dir>/analysis/.
void write_analysis_files(const AuditBundle& bundle, const std::filesystem::path& run_dir);

}  // namespace nsa
