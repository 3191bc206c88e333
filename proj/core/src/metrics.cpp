#include "nsa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nsa/errors.hpp"

namespace nsa {

int normalize(int d, FramingKind f) { return d ^ (negated(f) ? 1 : 0); }

std::vector<TrialRecord> normalize_trials(const std::vector<RawTrial>& kept) {
    std::vector<TrialRecord> out;
    out.reserve(kept.size());
    for (const RawTrial& r : kept) {
        if (!r.transport_ok || !r.parsed.d.has_value())
            throw ValidationError("normalize_trials: record for model '" + r.model +
                                  "' is not a valid filtered trial");
        TrialRecord t;
        t.model = r.model;
        t.scenario_id = r.scenario_id;
        t.domain = r.domain;
        t.framing = framing_from_name(r.framing);
        t.negated = negated(t.framing);
        t.temperature = r.temperature;
        t.sample_index = r.sample_index;
        t.d = *r.parsed.d;
        t.a = normalize(t.d, t.framing);
        t.confidence = r.parsed.confidence;
        out.push_back(std::move(t));
    }
    return out;
}

Interval wilson_interval(int successes, int n, double z) {
    if (n <= 0) throw EmptyCell("wilson_interval: n must be positive");
    const double nn = static_cast<double>(n);
    const double phat = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (phat + z2 / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
    Interval ci;
    ci.lo = std::clamp(center - half, 0.0, 1.0);
    ci.hi = std::clamp(center + half, 0.0, 1.0);
    return ci;
}

std::string_view scope_name(Scope s) {
    switch (s) {
        case Scope::model: return "model";
        case Scope::model_domain: return "model_domain";
        case Scope::model_scenario: return "model_scenario";
        case Scope::category: return "category";
    }
    return "?";
}

EndorsementCell endorsement_rate(const std::vector<const TrialRecord*>& records) {
    if (records.empty()) throw EmptyCell("endorsement_rate: empty cell");
    EndorsementCell cell;
    cell.model = records.front()->model;
    cell.framing = records.front()->framing;
    for (const TrialRecord* r : records) {
        cell.n_valid += 1;
        cell.n_endorse += r->a;
    }
    cell.p = static_cast<double>(cell.n_endorse) / cell.n_valid;
    cell.ci = wilson_interval(cell.n_endorse, cell.n_valid);
    return cell;
}

NsiResult nsi(const std::map<FramingKind, EndorsementCell>& cells) {
    for (FramingKind k : kAllFramings)
        if (!cells.count(k))
            throw MissingFraming("nsi: framing " + std::string(framing_name(k)) + " is missing");

    NsiResult r;
    const EndorsementCell& f0 = cells.at(FramingKind::F0);
    r.model = f0.model;
    r.scope = f0.scope;
    r.scope_value = f0.scope_value;
    r.per_framing = cells;

    double pmax = -1.0, pmin = 2.0;
    for (FramingKind k : kAllFramings) {
        double p = cells.at(k).p;
        if (p > pmax) {  // strict: ties keep the lowest framing index
            pmax = p;
            r.argmax_framing = k;
        }
        if (p < pmin) {
            pmin = p;
            r.argmin_framing = k;
        }
    }
    r.nsi = pmax - pmin;
    return r;
}

namespace {

struct GroupKey {
    std::string label;       // model name or category
    std::string scope_value;  // "", domain, or scenario id
    bool operator<(const GroupKey& o) const {
        return std::tie(label, scope_value) < std::tie(o.label, o.scope_value);
    }
};

}  // namespace

std::vector<NsiResult> group_nsi(const std::vector<TrialRecord>& records, Scope scope,
                                 const std::map<std::string, std::string>& model_category) {
    std::map<GroupKey, std::map<FramingKind, std::vector<const TrialRecord*>>> groups;
    for (const TrialRecord& r : records) {
        GroupKey key;
        switch (scope) {
            case Scope::model: key = {r.model, ""}; break;
            case Scope::model_domain: key = {r.model, r.domain}; break;
            case Scope::model_scenario: key = {r.model, r.scenario_id}; break;
            case Scope::category: {
                auto it = model_category.find(r.model);
                key = {it == model_category.end() ? std::string("uncategorized") : it->second, ""};
                break;
            }
        }
        groups[key][r.framing].push_back(&r);
    }

    std::vector<NsiResult> out;
    for (auto& [key, by_framing] : groups) {
        std::map<FramingKind, EndorsementCell> cells;
        for (auto& [framing, ptrs] : by_framing) {
            EndorsementCell cell = endorsement_rate(ptrs);
            cell.model = key.label;
            cell.scope = scope;
            cell.scope_value = key.scope_value;
            cells[framing] = cell;
        }
        for (FramingKind k : kAllFramings)
            if (!cells.count(k))
                throw MissingFraming("group " + key.label +
                                     (key.scope_value.empty() ? "" : "/" + key.scope_value) +
                                     ": framing " + std::string(framing_name(k)) + " is missing");
        out.push_back(nsi(cells));
    }
    return out;
}

double macro_mean_nsi(const std::vector<NsiResult>& per_scenario, const std::string& model) {
    double sum = 0.0;
    int n = 0;
    for (const NsiResult& r : per_scenario) {
        if (r.scope == Scope::model_scenario && r.model == model) {
            sum += r.nsi;
            n += 1;
        }
    }
    if (n == 0) throw EmptyCell("macro_mean_nsi: no per-scenario results for model '" + model + "'");
    return sum / n;
}

AgreementResult inter_model_agreement(const std::vector<TrialRecord>& records,
                                      const std::string& model_a, const std::string& model_b,
                                      FramingClass framing_class) {
    const bool want_negated = framing_class == FramingClass::negated;

    // key -> (sum of a, count), per model
    std::map<std::pair<std::string, FramingKind>, std::pair<int, int>> a_counts, b_counts;
    for (const TrialRecord& r : records) {
        if (negated(r.framing) != want_negated) continue;
        auto key = std::make_pair(r.scenario_id, r.framing);
        if (r.model == model_a) {
            a_counts[key].first += r.a;
            a_counts[key].second += 1;
        } else if (r.model == model_b) {
            b_counts[key].first += r.a;
            b_counts[key].second += 1;
        }
    }

    auto majority = [](const std::pair<int, int>& c) -> std::optional<int> {
        int endorse = c.first, n = c.second;
        if (2 * endorse == n) return std::nullopt;  // exact tie
        return 2 * endorse > n ? 1 : 0;
    };

    AgreementResult res;
    res.model_a = model_a;
    res.model_b = model_b;
    res.framing_class = framing_class;
    int matches = 0;
    bool any_shared_key = false;
    for (const auto& [key, ca] : a_counts) {
        auto itb = b_counts.find(key);
        if (itb == b_counts.end()) continue;
        any_shared_key = true;
        auto ma = majority(ca);
        auto mb = majority(itb->second);
        if (!ma || !mb) {
            res.n_ties_excluded += 1;
            continue;
        }
        res.n_compared += 1;
        if (*ma == *mb) matches += 1;
    }
    if (!any_shared_key)
        throw NoOverlap("inter_model_agreement: models '" + model_a + "' and '" + model_b +
                        "' share no (scenario, framing) keys in this class");
    res.agreement = res.n_compared == 0 ? 0.0 : static_cast<double>(matches) / res.n_compared;
    return res;
}

TemperatureDeltaSummary temperature_delta(const std::vector<NsiResult>& sampled,
                                          const std::vector<NsiResult>& greedy) {
    std::map<std::string, double> sampled_by_model, greedy_by_model;
    for (const NsiResult& r : sampled)
        if (r.scope == Scope::model) sampled_by_model[r.model] = r.nsi;
    for (const NsiResult& r : greedy)
        if (r.scope == Scope::model) greedy_by_model[r.model] = r.nsi;

    if (sampled_by_model.empty() || greedy_by_model.empty())
        throw ModelMismatch("temperature_delta: missing model-scope results");
    if (sampled_by_model.size() != greedy_by_model.size())
        throw ModelMismatch("temperature_delta: rosters differ in size");
    for (const auto& [model, _] : sampled_by_model)
        if (!greedy_by_model.count(model))
            throw ModelMismatch("temperature_delta: model '" + model + "' missing from greedy run");

    TemperatureDeltaSummary s;
    for (const auto& [model, nsi_sampled] : sampled_by_model) {
        TemperatureDelta d;
        d.model = model;
        d.nsi_sampled = nsi_sampled;
        d.nsi_greedy = greedy_by_model.at(model);
        d.delta = d.nsi_greedy - d.nsi_sampled;
        s.mean_sampled += d.nsi_sampled;
        s.mean_greedy += d.nsi_greedy;
        s.per_model.push_back(std::move(d));
    }
    const double n = static_cast<double>(s.per_model.size());
    s.mean_sampled /= n;
    s.mean_greedy /= n;
    s.mean_delta = s.mean_greedy - s.mean_sampled;
    s.relative_vs_sampled = s.mean_sampled == 0.0 ? 0.0 : s.mean_delta / s.mean_sampled;
    s.relative_vs_greedy = s.mean_greedy == 0.0 ? 0.0 : s.mean_delta / s.mean_greedy;
    return s;
}

}  // namespace nsa
