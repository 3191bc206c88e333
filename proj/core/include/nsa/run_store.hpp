#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nsa/provider.hpp"

namespace nsa {

// One persisted completion, one canonical-serialized JSON line in
// raw/<model>/<scenario>__<framing>.records.
struct RawRecord {
    std::string run_id;
    std::string timestamp_utc;
    std::string model;
    std::string provider;
    std::string scenario_id;
    std::string domain;
    std::string framing;
    int sample_index = 0;
    double temperature = 0.0;
    std::string envelope_version;
    std::string prompt_hash;  // 16 hex digits
    std::string raw_text;
    std::int64_t latency_ms = 0;
    std::string transport_status;
};

std::string serialize_record(const RawRecord& r);
RawRecord deserialize_record(const std::string& line, const std::string& origin, int lineno);

struct FailedKey {
    std::string model;
    std::string scenario_id;
    std::string framing;
    int sample_index = 0;
    std::string error;
};

struct ProviderSnapshot {
    std::string name;
    std::string kind;  // "scripted" or "http"
    std::string base_url;
    std::string model_id;
    std::string category;
};

struct RunManifest {
    std::string run_id;
    std::string corpus_path;
    std::string corpus_hash;
    int n_scenarios = 0;
    std::string envelope_version;
    double temperature = 0.7;
    int samples_per_cell = 30;
    std::uint64_t seed = 0;
    std::vector<ProviderSnapshot> providers;
    std::int64_t planned = 0;
    std::int64_t persisted = 0;
    std::vector<FailedKey> failed;
    std::string started_utc;
    std::int64_t wall_ms = 0;
};

// Deterministic run identity: hash of everything above except counts and
// timing. Two runs with the same corpus, roster and sampling plan share it.
std::string compute_run_id(const RunManifest& m);

void write_manifest(const std::filesystem::path& run_dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& run_dir);

// Path of the record file for one (model, scenario, framing) cell.
std::filesystem::path cell_path(const std::filesystem::path& run_dir, const std::string& model,
                                const std::string& scenario_id, const std::string& framing);

// Scans a cell file, validates each line, and truncates a partial trailing
// line left by a killed run. Returns the number of complete records, i.e.
// the next sample index to execute.
int resume_scan(const std::filesystem::path& cell_file);

// Appends one record line and flushes.
void append_record(const std::filesystem::path& cell_file, const RawRecord& r);

// Reads every record of a run, in deterministic (model, scenario, framing,
// sample) order. Throws ParseError naming file and line on corrupt input.
std::vector<RawRecord> read_run_records(const std::filesystem::path& run_dir);

std::string file_fnv_hash(const std::filesystem::path& path);

}  // namespace nsa
