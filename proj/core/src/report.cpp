#include "nsa/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "nsa/errors.hpp"

namespace nsa {

namespace fs = std::filesystem;

std::string fmt4(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

namespace {

// Canonical domain column order: the high-risk block first, then legal,
// then the baseline block; extension domains alphabetically at the end.
const std::vector<std::string> kDomainOrder = {"financial", "military",  "business", "legal",
                                               "science",   "education", "medical"};

std::vector<std::string> ordered_domains(const std::set<std::string>& present) {
    std::vector<std::string> out;
    for (const std::string& d : kDomainOrder)
        if (present.count(d)) out.push_back(d);
    for (const std::string& d : present)
        if (std::find(kDomainOrder.begin(), kDomainOrder.end(), d) == kDomainOrder.end())
            out.push_back(d);
    return out;
}

class CsvFile {
public:
    CsvFile(const fs::path& path, const std::string& run_id) : out_(path) {
        if (!out_) throw IoError("cannot write " + path.string());
        out_ << "# run_id: " << run_id << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out_ << ",";
            out_ << cells[i];
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

std::string category_of(const std::map<std::string, std::string>& categories,
                        const std::string& model) {
    auto it = categories.find(model);
    return it == categories.end() ? "uncategorized" : it->second;
}

std::string group_key_label(const NsiResult& r) {
    return r.scope_value.empty() ? r.model : r.model + "/" + r.scope_value;
}

void metrics_row(CsvFile& csv, const NsiResult& r, const std::string& macro) {
    std::vector<std::string> cells;
    cells.push_back(std::string(scope_name(r.scope)));
    cells.push_back(group_key_label(r));
    int n_valid = 0;
    for (FramingKind k : kAllFramings) n_valid += r.per_framing.at(k).n_valid;
    cells.push_back(std::to_string(n_valid));
    for (FramingKind k : kAllFramings) {
        const EndorsementCell& c = r.per_framing.at(k);
        cells.push_back(fmt4(c.p));
        cells.push_back(fmt4(c.ci.lo));
        cells.push_back(fmt4(c.ci.hi));
    }
    cells.push_back(fmt4(r.nsi));
    cells.push_back(std::string(framing_name(r.argmax_framing)));
    cells.push_back(std::string(framing_name(r.argmin_framing)));
    cells.push_back(macro);
    csv.row(cells);
}

}  // namespace

std::vector<RankedModel> ranking(const AuditBundle& bundle) {
    std::vector<RankedModel> out;
    for (const NsiResult& r : bundle.model_nsi) {
        if (r.scope != Scope::model) continue;
        RankedModel m;
        m.model = r.model;
        m.category = category_of(bundle.model_category, r.model);
        m.nsi = r.nsi;
        auto it = bundle.macro_nsi.find(r.model);
        m.macro_nsi = it == bundle.macro_nsi.end() ? r.nsi : it->second;
        out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end(), [](const RankedModel& a, const RankedModel& b) {
        if (a.nsi != b.nsi) return a.nsi > b.nsi;
        return a.model < b.model;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
    return out;
}

void emit_heatmap_data(const std::vector<NsiResult>& domain_nsi,
                       const std::map<std::string, std::string>& model_category,
                       const std::string& run_id, const fs::path& file) {
    if (domain_nsi.empty()) throw IoError("emit_heatmap_data: no domain-scope results");

    std::set<std::string> domains;
    std::map<std::string, std::map<std::string, double>> matrix;  // model -> domain -> nsi
    for (const NsiResult& r : domain_nsi) {
        if (r.scope != Scope::model_domain) continue;
        domains.insert(r.scope_value);
        matrix[r.model][r.scope_value] = r.nsi;
    }
    if (matrix.empty()) throw IoError("emit_heatmap_data: no domain-scope results");

    std::vector<std::string> models;
    for (const auto& [model, _] : matrix) models.push_back(model);
    std::sort(models.begin(), models.end(), [&](const std::string& a, const std::string& b) {
        const std::string ca = category_of(model_category, a), cb = category_of(model_category, b);
        if (ca != cb) return ca < cb;
        return a < b;
    });

    const std::vector<std::string> cols = ordered_domains(domains);
    CsvFile csv(file, run_id);
    std::vector<std::string> header = {"model", "category"};
    header.insert(header.end(), cols.begin(), cols.end());
    csv.row(header);
    for (const std::string& model : models) {
        std::vector<std::string> row = {model, category_of(model_category, model)};
        for (const std::string& d : cols) {
            auto it = matrix[model].find(d);
            row.push_back(it == matrix[model].end() ? "n/a" : fmt4(it->second));
        }
        csv.row(row);
    }
}

std::vector<ScatterPoint> confidence_scatter(const std::vector<TrialRecord>& records,
                                             const std::vector<NsiResult>& scenario_nsi,
                                             int* omitted) {
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> conf;  // sum, count
    for (const TrialRecord& r : records) {
        if (!r.confidence.has_value()) continue;
        auto& c = conf[{r.model, r.scenario_id}];
        c.first += *r.confidence;
        c.second += 1;
    }

    std::vector<ScatterPoint> points;
    int n_omitted = 0;
    for (const NsiResult& r : scenario_nsi) {
        if (r.scope != Scope::model_scenario) continue;
        auto it = conf.find({r.model, r.scope_value});
        if (it == conf.end() || it->second.second == 0) {
            n_omitted += 1;
            continue;
        }
        ScatterPoint p;
        p.model = r.model;
        p.scenario_id = r.scope_value;
        p.nsi = r.nsi;
        p.mean_confidence = it->second.first / it->second.second;
        p.danger = p.mean_confidence > 80.0 && p.nsi > 0.5;
        points.push_back(std::move(p));
    }
    if (omitted) *omitted = n_omitted;
    return points;
}

std::vector<std::string> emit_analysis_tables(const AuditBundle& bundle, const fs::path& dir) {
    const std::string& run_id = bundle.manifest.run_id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw IoError("cannot create " + dir.string());
    std::vector<std::string> written;

    // metrics.csv: one row per group at every scope.
    {
        CsvFile csv(dir / "metrics.csv", run_id);
        std::vector<std::string> header = {"scope", "key", "n_valid"};
        for (FramingKind k : kAllFramings) {
            std::string f(framing_name(k));
            header.push_back("p_" + f);
            header.push_back("ci_lo_" + f);
            header.push_back("ci_hi_" + f);
        }
        header.insert(header.end(), {"nsi", "argmax", "argmin", "macro_nsi"});
        csv.row(header);
        for (const NsiResult& r : bundle.model_nsi) {
            auto it = bundle.macro_nsi.find(r.model);
            metrics_row(csv, r, it == bundle.macro_nsi.end() ? "" : fmt4(it->second));
        }
        for (const NsiResult& r : bundle.category_nsi) metrics_row(csv, r, "");
        for (const NsiResult& r : bundle.domain_nsi) metrics_row(csv, r, "");
        for (const NsiResult& r : bundle.scenario_nsi) metrics_row(csv, r, "");
        written.push_back("metrics.csv");
    }

    // agreement.csv
    {
        CsvFile csv(dir / "agreement.csv", run_id);
        csv.row({"model_a", "model_b", "framing_class", "n_compared", "ties_excluded", "agreement"});
        for (const AgreementResult& a : bundle.agreement)
            csv.row({a.model_a, a.model_b,
                     a.framing_class == FramingClass::affirmative ? "affirmative" : "negated",
                     std::to_string(a.n_compared), std::to_string(a.n_ties_excluded),
                     fmt4(a.agreement)});
        written.push_back("agreement.csv");
    }

    // significance.csv
    {
        CsvFile csv(dir / "significance.csv", run_id);
        csv.row({"model", "scenario", "testable", "q", "df", "p", "significant", "note"});
        for (const PairSignificance& p : bundle.significance.pairs) {
            if (p.testable)
                csv.row({p.model, p.scenario_id, "yes", fmt4(p.q_statistic), std::to_string(p.df),
                         fmt4(p.p_value), p.significant ? "yes" : "no", ""});
            else
                csv.row({p.model, p.scenario_id, "no", "", "", "", "", p.untestable_reason});
        }
        written.push_back("significance.csv");
    }

    // filter_report.csv
    {
        CsvFile csv(dir / "filter_report.csv", run_id);
        csv.row({"model", "scenario", "framing", "n_total", "n_valid", "flagged"});
        for (const CellDropCount& c : bundle.filter.cells)
            csv.row({c.model, c.scenario_id, c.framing, std::to_string(c.n_total),
                     std::to_string(c.n_valid), c.flagged ? "yes" : "no"});
        written.push_back("filter_report.csv");
    }

    // ablation.csv (when a greedy twin run was analyzed)
    if (bundle.ablation.has_value()) {
        CsvFile csv(dir / "ablation.csv", run_id);
        csv.row({"model", "nsi_sampled", "nsi_greedy", "delta"});
        for (const TemperatureDelta& d : bundle.ablation->per_model)
            csv.row({d.model, fmt4(d.nsi_sampled), fmt4(d.nsi_greedy), fmt4(d.delta)});
        csv.row({"(mean)", fmt4(bundle.ablation->mean_sampled), fmt4(bundle.ablation->mean_greedy),
                 fmt4(bundle.ablation->mean_delta)});
        written.push_back("ablation.csv");
    }
    return written;
}

AuditReport emit_summary(const AuditBundle& bundle, const fs::path& out_dir) {
    const std::string& run_id = bundle.manifest.run_id;
    const fs::path report_dir = out_dir;
    const fs::path tables = report_dir / "tables";
    const fs::path plots = report_dir / "plots";
    std::error_code ec;
    fs::create_directories(tables, ec);
    fs::create_directories(plots, ec);
    if (!fs::is_directory(tables) || !fs::is_directory(plots))
        throw IoError("cannot create report tree under " + out_dir.string());

    AuditReport result;
    result.run_id = run_id;

    for (const std::string& name : emit_analysis_tables(bundle, tables))
        result.files.push_back("tables/" + name);

    // ---- tables/framing_by_category.csv: endorsement by framing.
    {
        CsvFile csv(tables / "framing_by_category.csv", run_id);
        csv.row({"category", "framing", "n_valid", "endorsement_rate", "ci_lo", "ci_hi"});
        for (const NsiResult& r : bundle.category_nsi) {
            for (FramingKind k : kAllFramings) {
                const EndorsementCell& c = r.per_framing.at(k);
                csv.row({r.model, std::string(framing_name(k)), std::to_string(c.n_valid),
                         fmt4(c.p), fmt4(c.ci.lo), fmt4(c.ci.hi)});
            }
        }
        result.files.push_back("tables/framing_by_category.csv");
    }

    // ---- tables/rankings.csv
    const std::vector<RankedModel> ranked = ranking(bundle);
    {
        CsvFile csv(tables / "rankings.csv", run_id);
        csv.row({"rank", "model", "category", "nsi", "macro_nsi"});
        for (const RankedModel& m : ranked)
            csv.row({std::to_string(m.rank), m.model, m.category, fmt4(m.nsi), fmt4(m.macro_nsi)});
        result.files.push_back("tables/rankings.csv");
    }

    // ---- tables/certification.csv
    {
        CsvFile csv(tables / "certification.csv", run_id);
        csv.row({"model", "domain", "nsi", "tier", "n_scenarios", "coverage_shortfall",
                 "overall_tier"});
        for (const CertificationReport& c : bundle.certifications)
            for (const DomainCertification& d : c.per_domain)
                csv.row({c.model, d.domain, fmt4(d.nsi), std::string(tier_name(d.tier)),
                         std::to_string(d.n_scenarios), d.coverage_shortfall ? "yes" : "no",
                         std::string(tier_name(c.overall_tier))});
        result.files.push_back("tables/certification.csv");
    }

    // ---- plots/
    emit_heatmap_data(bundle.domain_nsi, bundle.model_category, run_id,
                      plots / "domain_nsi_matrix.csv");
    result.files.push_back("plots/domain_nsi_matrix.csv");

    {
        const std::vector<ScatterPoint> points =
            confidence_scatter(bundle.records, bundle.scenario_nsi, &result.scatter_omitted);
        result.scatter_points = static_cast<int>(points.size());
        CsvFile csv(plots / "confidence_scatter.csv", run_id);
        csv.row({"model", "scenario", "nsi", "mean_confidence", "danger"});
        for (const ScatterPoint& p : points)
            csv.row({p.model, p.scenario_id, fmt4(p.nsi), fmt4(p.mean_confidence),
                     p.danger ? "yes" : "no"});
        result.files.push_back("plots/confidence_scatter.csv");
    }

    // ---- summary.md
    {
        std::ofstream md(report_dir / "summary.md");
        if (!md) throw IoError("cannot write summary.md");

        md << "# Negation sensitivity audit\n\n";
        md << "- run_id: `" << run_id << "`\n";
        md << "- corpus: " << bundle.manifest.corpus_path << " (hash `"
           << bundle.manifest.corpus_hash << "`, " << bundle.manifest.n_scenarios
           << " scenarios)\n";
        md << "- envelope: " << bundle.manifest.envelope_version << ", temperature "
           << fmt4(bundle.manifest.temperature) << ", " << bundle.manifest.samples_per_cell
           << " samples/cell, seed " << bundle.manifest.seed << "\n";
        md << "- results: " << bundle.manifest.persisted << " of " << bundle.manifest.planned
           << " planned completions persisted, " << bundle.manifest.failed.size() << " failed\n\n";

        md << "## Roster\n\n| model | kind | category |\n|---|---|---|\n";
        for (const ProviderSnapshot& p : bundle.manifest.providers)
            md << "| " << p.name << " | " << p.kind << " | " << p.category << " |\n";
        md << "\n";

        md << "## Quality filtering\n\n";
        md << "- input records: " << bundle.filter.n_input << "\n";
        md << "- kept: " << bundle.filter.n_kept << ", dropped invalid: "
           << bundle.filter.n_dropped_invalid << ", dropped transport: "
           << bundle.filter.n_dropped_transport << "\n";
        int flagged = 0;
        for (const CellDropCount& c : bundle.filter.cells)
            if (c.flagged) flagged += 1;
        md << "- cells below the " << fmt4(bundle.filter.floor_fraction)
           << " valid floor: " << flagged << "\n\n";

        md << "## Endorsement by framing (normalized)\n\n";
        md << "| category | F0 | F1 | F2 | F3 | NSI |\n|---|---|---|---|---|---|\n";
        for (const NsiResult& r : bundle.category_nsi) {
            md << "| " << r.model;
            for (FramingKind k : kAllFramings) md << " | " << fmt4(r.per_framing.at(k).p);
            md << " | " << fmt4(r.nsi) << " |\n";
        }
        md << "\n";

        md << "## Model rankings\n\n";
        md << "| rank | model | category | NSI (pooled) | NSI (mean per-scenario) |\n"
              "|---|---|---|---|---|\n";
        for (const RankedModel& m : ranked)
            md << "| " << m.rank << " | " << m.model << " | " << m.category << " | " << fmt4(m.nsi)
               << " | " << fmt4(m.macro_nsi) << " |\n";
        md << "\nPooled NSI aggregates all trials of a model before computing per-framing rates;\n"
              "the mean of per-scenario NSI values is reported alongside because the two\n"
              "aggregations legitimately differ.\n\n";

        md << "## NSI by model and domain\n\n";
        {
            std::set<std::string> domains;
            for (const NsiResult& r : bundle.domain_nsi)
                if (r.scope == Scope::model_domain) domains.insert(r.scope_value);
            const std::vector<std::string> cols = ordered_domains(domains);
            std::map<std::string, std::map<std::string, double>> matrix;
            for (const NsiResult& r : bundle.domain_nsi)
                if (r.scope == Scope::model_domain) matrix[r.model][r.scope_value] = r.nsi;
            md << "| model |";
            for (const std::string& d : cols) md << " " << d << " |";
            md << "\n|---|";
            for (std::size_t i = 0; i < cols.size(); ++i) md << "---|";
            md << "\n";
            for (const auto& [model, by_domain] : matrix) {
                md << "| " << model << " |";
                for (const std::string& d : cols) {
                    auto it = by_domain.find(d);
                    md << " " << (it == by_domain.end() ? "n/a" : fmt4(it->second)) << " |";
                }
                md << "\n";
            }
            md << "\n";
        }

        md << "## Inter-model agreement\n\n";
        {
            double sum_aff = 0.0, sum_neg = 0.0;
            int n_aff = 0, n_neg = 0;
            for (const AgreementResult& a : bundle.agreement) {
                if (a.framing_class == FramingClass::affirmative) {
                    sum_aff += a.agreement;
                    n_aff += 1;
                } else {
                    sum_neg += a.agreement;
                    n_neg += 1;
                }
            }
            md << "- affirmative framings (F0, F2): mean pairwise agreement "
               << (n_aff ? fmt4(sum_aff / n_aff) : "n/a") << " over " << n_aff << " pairs\n";
            md << "- negated framings (F1, F3): mean pairwise agreement "
               << (n_neg ? fmt4(sum_neg / n_neg) : "n/a") << " over " << n_neg << " pairs\n\n";
        }

        md << "## Statistical validation\n\n";
        md << "- per-(model, scenario) framing-effect tests: " << bundle.significance.n_testable
           << " testable, " << bundle.significance.n_significant
           << " significant after FDR correction (q=" << fmt4(bundle.significance.q_level)
           << ")\n";
        md << "- share significant: " << fmt4(bundle.significance.share_significant) << "\n\n";

        if (bundle.ablation.has_value()) {
            const TemperatureDeltaSummary& ab = *bundle.ablation;
            md << "## Temperature ablation\n\n";
            md << "| model | NSI sampled | NSI greedy | delta |\n|---|---|---|---|\n";
            for (const TemperatureDelta& d : ab.per_model)
                md << "| " << d.model << " | " << fmt4(d.nsi_sampled) << " | " << fmt4(d.nsi_greedy)
                   << " | " << fmt4(d.delta) << " |\n";
            md << "\nMean NSI " << fmt4(ab.mean_sampled) << " (sampled) vs " << fmt4(ab.mean_greedy)
               << " (greedy); mean delta " << fmt4(ab.mean_delta) << " ("
               << fmt4(ab.relative_vs_sampled * 100.0) << "% of the sampled mean, "
               << fmt4(ab.relative_vs_greedy * 100.0)
               << "% of the greedy mean; both conventions reported).\n\n";
        }

        md << "## Certification\n\n";
        for (const CertificationReport& c : bundle.certifications) {
            md << "### " << c.model << " - overall Tier " << tier_name(c.overall_tier) << "\n\n";
            md << "| domain | NSI | tier | scenarios | coverage |\n|---|---|---|---|---|\n";
            for (const DomainCertification& d : c.per_domain)
                md << "| " << d.domain << " | " << fmt4(d.nsi) << " | " << tier_name(d.tier)
                   << " | " << d.n_scenarios << " | "
                   << (d.coverage_shortfall
                           ? "below minimum of " + std::to_string(c.coverage_minimum)
                           : "ok")
                   << " |\n";
            md << "\n- worst-case scenario: " << c.worst_scenario_id << " (NSI "
               << fmt4(c.worst_scenario_nsi) << ")\n";
            md << "- evidence: " << c.n_trials << " valid trials, widest cell CI "
               << fmt4(c.max_ci_width) << ", run `" << c.run_id << "`\n";
            md << "- disclosure: " << c.disclosure << "\n\n";
        }

        md << "## Confidence vs fragility\n\n";
        md << "- scatter points: " << result.scatter_points << " (pairs without confidence: "
           << result.scatter_omitted << ")\n\n";

        md << "## Files\n\n";
        for (const std::string& f : result.files) md << "- " << f << "\n";
        result.files.push_back("summary.md");
    }

    return result;
}

}  // namespace nsa
