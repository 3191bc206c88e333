#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsa/metrics.hpp"

namespace nsa {

// Upper tail of the chi-square distribution: P(X >= x) for X ~ chi2(df).
// Computed through the regularized incomplete gamma function with the usual
// series / continued-fraction split; no external statistics dependency.
double chi_square_tail(double x, int df);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

enum class TestKind { cochran_q, kruskal_wallis };

struct TestResult {
    TestKind test = TestKind::cochran_q;
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    std::string group_key;
    int n_subjects = 0;  // informative rows (Cochran) or total observations (KW)
};

// Cochran's Q over a subjects x k matrix of binary outcomes. Rows that are
// all-0 or all-1 carry no information and are dropped before computation.
// Throws ShapeError (k < 2 or ragged rows) and NoVariation (no informative
// rows left).
TestResult cochran_q(const std::vector<std::vector<int>>& matrix);

// Kruskal-Wallis H with midranks and the standard tie correction.
// Throws ShapeError (< 2 groups or an empty group) and DegenerateInput
// (all values identical across all groups).
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

struct FdrOutcome {
    std::vector<double> raw_p;
    double q_level = 0.05;
    std::vector<int> rejected;       // 1 where the step-up rule rejects
    std::vector<double> adjusted_p;  // monotone BH-adjusted p-values
};

// Benjamini-Hochberg step-up. Throws RangeError on p outside [0,1] or q
// outside (0,1).
FdrOutcome bh_fdr(const std::vector<double>& p_values, double q = 0.05);

struct PairSignificance {
    std::string model;
    std::string scenario_id;
    bool testable = false;
    std::string untestable_reason;
    double q_statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    bool significant = false;  // after BH correction
};

struct SignificanceSweep {
    std::vector<PairSignificance> pairs;
    double q_level = 0.05;
    int n_testable = 0;
    int n_significant = 0;
    double share_significant = 0.0;  // significant / testable
};

// Per (model, scenario) Cochran's Q over subjects = sample indices aligned
// across the four framings, with BH correction across all testable pairs.
// Subjects missing any framing (dropped samples) are excluded from the
// matrix; pairs that cannot be tested are marked untestable.
SignificanceSweep significance_sweep(const std::vector<TrialRecord>& records, double q_level = 0.05);

}  // namespace nsa
