#include "nsa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nsa/errors.hpp"

namespace nsa {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Lower regularized incomplete gamma P(a, x) by series expansion.
// Converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw RangeError("gamma_p_series: no convergence");
}

// Upper regularized incomplete gamma Q(a, x) by modified Lentz continued
// fraction. Converges quickly for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw RangeError("gamma_q_contfrac: no convergence");
}

}  // namespace

double gamma_q(double a, double x) {
    if (a <= 0.0) throw RangeError("gamma_q: a must be positive");
    if (x < 0.0) throw RangeError("gamma_q: x must be non-negative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi_square_tail(double x, int df) {
    if (df < 1) throw RangeError("chi_square_tail: df must be >= 1");
    if (x < 0.0) throw RangeError("chi_square_tail: x must be non-negative");
    return gamma_q(0.5 * df, 0.5 * x);
}

TestResult cochran_q(const std::vector<std::vector<int>>& matrix) {
    if (matrix.empty()) throw NoVariation("cochran_q: empty matrix");
    const std::size_t k = matrix.front().size();
    if (k < 2) throw ShapeError("cochran_q: need k >= 2 conditions");
    for (const auto& row : matrix) {
        if (row.size() != k) throw ShapeError("cochran_q: ragged matrix");
        for (int v : row)
            if (v != 0 && v != 1) throw ShapeError("cochran_q: entries must be 0/1");
    }

    // All-0 and all-1 rows carry no within-subject variation.
    std::vector<const std::vector<int>*> rows;
    for (const auto& row : matrix) {
        int total = 0;
        for (int v : row) total += v;
        if (total != 0 && total != static_cast<int>(k)) rows.push_back(&row);
    }
    if (rows.empty()) throw NoVariation("cochran_q: no informative rows (all rows constant)");

    double n_total = 0.0;
    std::vector<double> col_sums(k, 0.0);
    double row_sq = 0.0;
    for (const auto* row : rows) {
        int r = 0;
        for (std::size_t j = 0; j < k; ++j) {
            col_sums[j] += (*row)[j];
            r += (*row)[j];
        }
        n_total += r;
        row_sq += static_cast<double>(r) * r;
    }
    double col_sq = 0.0;
    for (double c : col_sums) col_sq += c * c;

    const double kk = static_cast<double>(k);
    const double denom = kk * n_total - row_sq;
    if (denom <= 0.0) throw NoVariation("cochran_q: zero variance denominator");
    const double q = (kk - 1.0) * (kk * col_sq - n_total * n_total) / denom;

    TestResult res;
    res.test = TestKind::cochran_q;
    res.statistic = q;
    res.df = static_cast<int>(k) - 1;
    res.p_value = chi_square_tail(q, res.df);
    res.n_subjects = static_cast<int>(rows.size());
    return res;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ShapeError("kruskal_wallis: need >= 2 groups");
    for (const auto& g : groups)
        if (g.empty()) throw ShapeError("kruskal_wallis: empty group");

    struct Obs {
        double value;
        std::size_t group;
    };
    std::vector<Obs> all;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (double v : groups[g]) all.push_back({v, g});
    const std::size_t n = all.size();

    std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.value < b.value; });

    // Midranks plus the tie-correction sum of (t^3 - t) over tie groups.
    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_sum = 0.0;
    bool all_tied = true;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && all[j].value == all[i].value) ++j;
        const double t = static_cast<double>(j - i);
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
        for (std::size_t m = i; m < j; ++m) rank_sum[all[m].group] += midrank;
        tie_sum += t * t * t - t;
        if (t != static_cast<double>(n)) all_tied = false;
        i = j;
    }
    if (all_tied) throw DegenerateInput("kruskal_wallis: all values identical across all groups");

    const double nn = static_cast<double>(n);
    double h = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g)
        h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    h = 12.0 / (nn * (nn + 1.0)) * h - 3.0 * (nn + 1.0);

    const double correction = 1.0 - tie_sum / (nn * nn * nn - nn);
    h /= correction;
    // Rank arithmetic can leave a tiny negative residue when groups balance.
    if (h < 0.0 && h > -1e-9) h = 0.0;

    TestResult res;
    res.test = TestKind::kruskal_wallis;
    res.statistic = h;
    res.df = static_cast<int>(groups.size()) - 1;
    res.p_value = chi_square_tail(h, res.df);
    res.n_subjects = static_cast<int>(n);
    return res;
}

FdrOutcome bh_fdr(const std::vector<double>& p_values, double q) {
    if (q <= 0.0 || q >= 1.0) throw RangeError("bh_fdr: q must be in (0,1)");
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0)) throw RangeError("bh_fdr: p-value outside [0,1]");

    FdrOutcome out;
    out.raw_p = p_values;
    out.q_level = q;
    const std::size_t m = p_values.size();
    out.rejected.assign(m, 0);
    out.adjusted_p.assign(m, 1.0);
    if (m == 0) return out;

    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    // Step-up: reject everything at or below the largest rank i with
    // p_(i) <= (i/m) q.
    std::size_t cutoff = 0;  // 1-based rank; 0 = none
    for (std::size_t r = 1; r <= m; ++r) {
        if (p_values[order[r - 1]] <= static_cast<double>(r) / static_cast<double>(m) * q)
            cutoff = r;
    }
    for (std::size_t r = 1; r <= cutoff; ++r) out.rejected[order[r - 1]] = 1;

    // Adjusted p-values: running minimum of (m/r) p_(r) from the top.
    double running = 1.0;
    for (std::size_t r = m; r >= 1; --r) {
        double adj = p_values[order[r - 1]] * static_cast<double>(m) / static_cast<double>(r);
        running = std::min(running, std::min(adj, 1.0));
        out.adjusted_p[order[r - 1]] = running;
    }
    return out;
}

SignificanceSweep significance_sweep(const std::vector<TrialRecord>& records, double q_level) {
    // (model, scenario) -> sample_index -> framing -> a
    std::map<std::pair<std::string, std::string>, std::map<int, std::map<FramingKind, int>>> grid;
    for (const TrialRecord& r : records)
        grid[{r.model, r.scenario_id}][r.sample_index][r.framing] = r.a;

    SignificanceSweep sweep;
    sweep.q_level = q_level;

    std::vector<double> p_values;
    std::vector<std::size_t> testable_index;
    for (const auto& [key, subjects] : grid) {
        PairSignificance pair;
        pair.model = key.first;
        pair.scenario_id = key.second;

        std::vector<std::vector<int>> matrix;
        for (const auto& [sample, by_framing] : subjects) {
            if (by_framing.size() != kAllFramings.size()) continue;  // incomplete subject
            std::vector<int> row;
            row.reserve(kAllFramings.size());
            for (FramingKind k : kAllFramings) row.push_back(by_framing.at(k));
            matrix.push_back(std::move(row));
        }

        try {
            TestResult t = cochran_q(matrix);
            pair.testable = true;
            pair.q_statistic = t.statistic;
            pair.df = t.df;
            pair.p_value = t.p_value;
            testable_index.push_back(sweep.pairs.size());
            p_values.push_back(t.p_value);
        } catch (const Error& e) {
            pair.testable = false;
            pair.untestable_reason = e.what();
        }
        sweep.pairs.push_back(std::move(pair));
    }

    FdrOutcome fdr = bh_fdr(p_values, q_level);
    for (std::size_t i = 0; i < testable_index.size(); ++i)
        sweep.pairs[testable_index[i]].significant = fdr.rejected[i] == 1;

    sweep.n_testable = static_cast<int>(testable_index.size());
    for (const auto& p : sweep.pairs)
        if (p.significant) sweep.n_significant += 1;
    sweep.share_significant =
        sweep.n_testable == 0 ? 0.0
                              : static_cast<double>(sweep.n_significant) / sweep.n_testable;
    return sweep;
}

}  // namespace nsa
