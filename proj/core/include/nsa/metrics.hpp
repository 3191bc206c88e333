#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsa/framing.hpp"
#include "nsa/parser.hpp"

namespace nsa {

// One valid, polarity-normalized trial. `a` is the action-endorsement bit:
// agreeing with an affirmative framing and disagreeing with its negated
// twin both endorse the action.
struct TrialRecord {
    std::string model;
    std::string scenario_id;
    std::string domain;
    FramingKind framing = FramingKind::F0;
    bool negated = false;
    double temperature = 0.0;
    int sample_index = 0;
    int d = 0;  // raw decision: 1=agree, 0=disagree
    int a = 0;  // normalized endorsement: d XOR negated(framing)
    std::optional<double> confidence;
};

// Maps a raw agree/disagree bit to the action-endorsement bit for framing f.
int normalize(int d, FramingKind f);

// Builds normalized TrialRecords from filtered raw trials. Inputs must be
// valid (transport ok, decision parsed); anything else throws.
std::vector<TrialRecord> normalize_trials(const std::vector<RawTrial>& kept);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

// 95% Wilson score interval for a binomial proportion. Well behaved at
// rates of exactly 0 and 1, which ceiling-effect cells hit routinely.
Interval wilson_interval(int successes, int n, double z = 1.959963984540054);

enum class Scope { model, model_domain, model_scenario, category };

std::string_view scope_name(Scope s);

struct EndorsementCell {
    std::string model;      // or category label for Scope::category
    Scope scope = Scope::model;
    std::string scope_value;  // scenario id, domain, or "" for whole-model
    FramingKind framing = FramingKind::F0;
    int n_valid = 0;
    int n_endorse = 0;
    double p = 0.0;  // n_endorse / n_valid
    Interval ci;
};

// Endorsement rate over the normalized bit `a` for one group of records that
// all share a (model, scope, framing) key. Throws EmptyCell on no input.
EndorsementCell endorsement_rate(const std::vector<const TrialRecord*>& records);

struct NsiResult {
    std::string model;  // or category label
    Scope scope = Scope::model;
    std::string scope_value;
    double nsi = 0.0;
    FramingKind argmax_framing = FramingKind::F0;
    FramingKind argmin_framing = FramingKind::F0;
    std::map<FramingKind, EndorsementCell> per_framing;
};

// Max minus min of the four per-framing endorsement rates. All four framings
// must be present (MissingFraming otherwise); ties break toward the lowest
// framing index.
NsiResult nsi(const std::map<FramingKind, EndorsementCell>& cells);

// Pools trials within each group of the requested scope (micro-average) and
// computes one NsiResult per group. For Scope::category a model -> category
// map must be supplied.
std::vector<NsiResult> group_nsi(const std::vector<TrialRecord>& records, Scope scope,
                                 const std::map<std::string, std::string>& model_category = {});

// Mean of per-scenario NSI values for one model (macro-average). Emitted
// alongside the pooled figure; the two legitimately differ.
double macro_mean_nsi(const std::vector<NsiResult>& per_scenario, const std::string& model);

enum class FramingClass { affirmative, negated };

struct AgreementResult {
    std::string model_a;
    std::string model_b;
    FramingClass framing_class = FramingClass::affirmative;
    int n_compared = 0;
    int n_ties_excluded = 0;
    double agreement = 0.0;
};

// Fraction of (scenario, framing) keys in the class where the two models'
// per-key majority normalized endorsements match. Exact ties are excluded
// and counted. Throws NoOverlap when no comparable key exists.
AgreementResult inter_model_agreement(const std::vector<TrialRecord>& records,
                                      const std::string& model_a, const std::string& model_b,
                                      FramingClass framing_class);

struct TemperatureDelta {
    std::string model;
    double nsi_sampled = 0.0;  // e.g. T=0.7
    double nsi_greedy = 0.0;   // T=0.0
    double delta = 0.0;        // greedy - sampled
};

struct TemperatureDeltaSummary {
    std::vector<TemperatureDelta> per_model;
    double mean_sampled = 0.0;
    double mean_greedy = 0.0;
    double mean_delta = 0.0;
    double relative_vs_sampled = 0.0;  // mean_delta / mean_sampled
    double relative_vs_greedy = 0.0;   // mean_delta / mean_greedy
};

// Per-model NSI difference between a greedy (T=0.0) run and a sampled run.
// Model rosters must match exactly (ModelMismatch otherwise).
TemperatureDeltaSummary temperature_delta(const std::vector<NsiResult>& sampled,
                                          const std::vector<NsiResult>& greedy);

}  // namespace nsa
