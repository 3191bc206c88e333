#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nsa/corpus.hpp"
#include "nsa/provider.hpp"
#include "nsa/run_store.hpp"

namespace nsa {

struct PlanOptions {
    std::string envelope_version = "v1";
    std::string corpus_path;  // recorded in the manifest
    std::string corpus_hash;
    // Invoked after each persisted record; used by progress displays.
    std::function<void(std::int64_t done, std::int64_t planned)> on_progress;
};

// Executes the full factorial plan (providers x scenarios x framings x
// samples) into run_dir. One append-only record file per (model, scenario,
// framing) cell; samples inside a cell run sequentially in index order, so
// rerunning a scripted plan reproduces files byte for byte. Already
// persisted samples are skipped (idempotent resume). Work is spread over
// max_concurrent workers per provider with requests-per-minute pacing.
//
// The manifest is written on completion either way; if any key failed after
// retries, PartialRunError is thrown after the manifest is on disk and all
// successfully persisted results remain valid.
RunManifest run_sampling_plan(const std::vector<Provider*>& providers,
                              const std::vector<Scenario>& corpus, const SamplingConfig& sampling,
                              const std::filesystem::path& run_dir, const PlanOptions& options);

}  // namespace nsa
