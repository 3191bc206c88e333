#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsa/certify.hpp"
#include "nsa/metrics.hpp"
#include "nsa/parser.hpp"
#include "nsa/run_store.hpp"
#include "nsa/stats.hpp"

namespace nsa {

// Everything the analysis stage computes for one run; the report is
// generated from these in-memory tables, so markdown and CSV values always
// match.
struct AuditBundle {
    RunManifest manifest;
    FilterReport filter;
    std::vector<TrialRecord> records;
    std::vector<NsiResult> model_nsi;
    std::vector<NsiResult> domain_nsi;
    std::vector<NsiResult> scenario_nsi;
    std::vector<NsiResult> category_nsi;
    std::map<std::string, double> macro_nsi;          // model -> mean per-scenario NSI
    std::map<std::string, std::string> model_category;
    std::vector<AgreementResult> agreement;
    SignificanceSweep significance;
    std::vector<CertificationReport> certifications;
    std::optional<TemperatureDeltaSummary> ablation;
};

struct RankedModel {
    int rank = 0;
    std::string model;
    std::string category;
    double nsi = 0.0;
    double macro_nsi = 0.0;
};

// Models sorted by NSI descending, ties broken by name.
std::vector<RankedModel> ranking(const AuditBundle& bundle);

struct AuditReport {
    std::string run_id;
    std::vector<std::string> files;  // paths written, relative to out_dir
    int scatter_points = 0;
    int scatter_omitted = 0;  // model-scenario pairs without any confidence
};

// Writes the machine-readable analysis tables (metrics, significance,
// agreement, filter report, ablation when present) into `dir`. Returns the
// relative names written.
std::vector<std::string> emit_analysis_tables(const AuditBundle& bundle,
                                              const std::filesystem::path& dir);

// Writes the full report tree: report/summary.md, report/tables/*.csv and
// report/plots/*.csv. Rates carry four decimals; output is byte-deterministic
// given identical inputs. Throws IoError when the tree cannot be written.
AuditReport emit_summary(const AuditBundle& bundle, const std::filesystem::path& out_dir);

// Model x domain NSI matrix (rows sorted by category then name, one column
// per domain, "n/a" for missing cells). Throws on empty input.
void emit_heatmap_data(const std::vector<NsiResult>& domain_nsi,
                       const std::map<std::string, std::string>& model_category,
                       const std::string& run_id, const std::filesystem::path& file);

struct ScatterPoint {
    std::string model;
    std::string scenario_id;
    double nsi = 0.0;
    double mean_confidence = 0.0;
    bool danger = false;  // confidence > 80 and NSI > 0.5
};

// Per (model, scenario) confidence-vs-NSI points. Pairs without any
// confidence value are omitted and counted.
std::vector<ScatterPoint> confidence_scatter(const std::vector<TrialRecord>& records,
                                             const std::vector<NsiResult>& scenario_nsi,
                                             int* omitted = nullptr);

// Fixed-point rate formatting used across all emitted tables.
std::string fmt4(double value);

}  // namespace nsa
