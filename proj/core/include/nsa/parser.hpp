#pragma once

#include <optional>
#include <string>
#include <vector>

namespace nsa {

enum class Decision { agree, disagree, invalid };

std::string_view decision_name(Decision d);

struct ParsedDecision {
    Decision decision = Decision::invalid;
    std::optional<int> d;           // 1=agree, 0=disagree; absent iff invalid
    std::optional<double> confidence;  // percentage in [0,100] when present
    std::string parse_rule;         // which rule of the cascade fired
};

// Total, deterministic rule cascade:
//   1. first-line verdict token AGREE/DISAGREE (case-insensitive)
//   2. leading yes/no or "I agree"/"I disagree" stem within the first sentence
//   3. otherwise invalid
// A reply whose scanned scope contains both an agree and a disagree stem is
// invalid, never tie-broken. Refusals parse as invalid. Confidence comes from
// a "CONFIDENCE: n" line when present and in range.
ParsedDecision parse_decision(const std::string& raw_text);

// One raw trial as it comes back from the run store, before filtering.
struct RawTrial {
    std::string model;
    std::string scenario_id;
    std::string domain;
    std::string framing;          // "F0".."F3"
    int sample_index = 0;
    double temperature = 0.0;
    bool transport_ok = true;
    ParsedDecision parsed;
};

struct CellDropCount {
    std::string model;
    std::string scenario_id;
    std::string framing;
    int n_total = 0;
    int n_valid = 0;
    bool flagged = false;  // valid count fell below the floor
};

struct FilterReport {
    std::size_t n_input = 0;
    std::size_t n_kept = 0;
    std::size_t n_dropped_invalid = 0;
    std::size_t n_dropped_transport = 0;
    double floor_fraction = 0.8;
    int samples_per_cell = 0;
    std::vector<CellDropCount> cells;  // one entry per (model, scenario, framing)
};

struct FilterResult {
    std::vector<RawTrial> kept;
    std::vector<RawTrial> dropped;
    FilterReport report;
};

// Drops invalid parses and transport failures. Kept records are unaltered and
// |kept| + |dropped| == |input|. Cells whose valid count falls below
// floor_fraction * samples_per_cell are flagged in the report (reporting
// only; nothing is excluded on that basis).
FilterResult quality_filter(const std::vector<RawTrial>& records, int samples_per_cell,
                            double floor_fraction = 0.8);

}  // namespace nsa
