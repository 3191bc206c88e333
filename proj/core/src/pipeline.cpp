#include "nsa/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "nsa/errors.hpp"
#include "nsa/hash.hpp"

namespace nsa {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& value, const std::string& where) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": expected a number, got '" + value + "'");
    }
}

long parse_long(const std::string& value, const std::string& where) {
    try {
        std::size_t used = 0;
        long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": expected an integer, got '" + value + "'");
    }
}

FramingKind framing_field(const std::string& key) {
    return framing_from_name("F" + key.substr(key.size() - 1));
}

void apply_provider_field(ProviderSpec& p, const std::string& key, const std::string& value,
                          const std::string& where) {
    if (key == "name") {
        p.http.name = value;
        p.scripted.name = value;
    } else if (key == "kind") {
        if (value == "scripted" || value == "http") p.kind = value;
        else if (value.rfind("scripted:", 0) == 0) {
            ProviderSpec arch = parse_provider_spec(value);
            std::string name = p.scripted.name.empty() ? arch.scripted.name : p.scripted.name;
            p = arch;
            p.scripted.name = name;
            p.http.name = name;
        } else throw ParseError(where + ": unknown provider kind '" + value + "'");
    } else if (key == "base_url") p.http.base_url = value;
    else if (key == "model_id") p.http.model_id = value;
    else if (key == "auth_env_var") p.http.auth_env_var = value;
    else if (key == "category") {
        p.http.category = value;
    } else if (key == "max_concurrent")
        p.http.max_concurrent = static_cast<int>(parse_long(value, where));
    else if (key == "requests_per_minute")
        p.http.requests_per_minute = static_cast<int>(parse_long(value, where));
    else if (key == "timeout") p.http.timeout_seconds = parse_double(value, where);
    else if (key == "max_retries") p.http.max_retries = static_cast<int>(parse_long(value, where));
    else if (key == "agree_f0" || key == "agree_f1" || key == "agree_f2" || key == "agree_f3")
        p.scripted.agree_probability[framing_field(key)] = parse_double(value, where);
    else if (key == "confidence_lo")
        p.scripted.confidence_lo = static_cast<int>(parse_long(value, where));
    else if (key == "confidence_hi")
        p.scripted.confidence_hi = static_cast<int>(parse_long(value, where));
    else if (key == "scripted_mode") {
        if (value == "stochastic") p.scripted.mode = ScriptedMode::stochastic;
        else if (value == "threshold-deterministic" || value == "deterministic")
            p.scripted.mode = ScriptedMode::threshold_deterministic;
        else throw ParseError(where + ": unknown scripted_mode '" + value + "'");
    } else
        throw ParseError(where + ": unknown provider field '" + key + "'");
}

void finish_provider(ProviderSpec& p, const std::string& where) {
    if (p.kind.empty()) throw ParseError(where + ": provider block missing 'kind'");
    if (p.kind == "http") {
        if (p.http.name.empty()) throw ParseError(where + ": http provider missing 'name'");
        if (p.http.base_url.empty()) throw ParseError(where + ": http provider missing 'base_url'");
        if (p.http.auth_env_var == "-") p.http.auth_env_var.clear();
    } else {
        if (p.scripted.name.empty()) throw ParseError(where + ": scripted provider missing 'name'");
        validate_scripted_spec(p.scripted);
    }
}

}  // namespace

ProviderSpec parse_provider_spec(const std::string& spec) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t colon = spec.find(':', start);
        if (colon == std::string::npos) {
            parts.push_back(spec.substr(start));
            break;
        }
        parts.push_back(spec.substr(start, colon - start));
        start = colon + 1;
    }
    if (parts.empty()) throw ParseError("empty provider spec");

    ProviderSpec out;
    if (parts[0] == "scripted") {
        if (parts.size() < 2) throw ParseError("scripted provider spec needs an archetype name");
        out.kind = "scripted";
        out.scripted = scripted_archetype(parts[1]);
        if (parts.size() >= 3) {
            if (parts[2] == "deterministic") {
                out.scripted.mode = ScriptedMode::threshold_deterministic;
                out.scripted.name += "-greedy";
            } else {
                throw ParseError("unknown scripted provider modifier '" + parts[2] + "'");
            }
        }
        out.http.name = out.scripted.name;
        return out;
    }
    if (parts[0] == "http") {
        // http:NAME:MODEL_ID:BASE_URL (base_url may itself contain colons)
        if (parts.size() < 4) throw ParseError("http provider spec: http:NAME:MODEL_ID:BASE_URL");
        out.kind = "http";
        out.http.name = parts[1];
        out.http.model_id = parts[2];
        std::string url = parts[3];
        for (std::size_t i = 4; i < parts.size(); ++i) url += ":" + parts[i];
        out.http.base_url = url;
        std::string env = "NSA_KEY_";
        for (char c : parts[1]) env += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        out.http.auth_env_var = env;
        return out;
    }
    throw ParseError("unknown provider spec '" + spec + "' (expected scripted:... or http:...)");
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);

    RunConfig cfg;
    std::optional<ProviderSpec> current;
    std::string line;
    int lineno = 0;
    auto where = [&]() { return path + ":" + std::to_string(lineno); };

    auto flush_provider = [&]() {
        if (!current) return;
        finish_provider(*current, where());
        cfg.providers.push_back(*current);
        current.reset();
    };

    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t == "[provider]") {
            flush_provider();
            current = ProviderSpec{};
            // scripted defaults are filled per field; kind decides which half is used
            current->http.auth_env_var = "";
            continue;
        }
        std::size_t colon = t.find(':');
        if (colon == std::string::npos)
            throw ParseError(where() + ": expected 'key: value', got '" + t + "'");
        std::string key = trim(t.substr(0, colon));
        std::string value = trim(t.substr(colon + 1));

        if (current) {
            apply_provider_field(*current, key, value, where());
            continue;
        }
        if (key == "corpus") cfg.corpus_path = value;
        else if (key == "out") cfg.out_dir = value;
        else if (key == "samples") cfg.sampling.samples_per_cell = static_cast<int>(parse_long(value, where()));
        else if (key == "temperature") cfg.sampling.temperature = parse_double(value, where());
        else if (key == "seed") cfg.sampling.seed = static_cast<std::uint64_t>(parse_long(value, where()));
        else if (key == "envelope") cfg.envelope_version = value;
        else if (key == "thresholds") cfg.thresholds_path = value;
        else if (key == "filter_floor") cfg.filter_floor = parse_double(value, where());
        else if (key == "ablation") cfg.ablation_temperatures.push_back(parse_double(value, where()));
        else if (key == "provider") cfg.providers.push_back(parse_provider_spec(value));
        else throw ParseError(where() + ": unknown key '" + key + "'");
    }
    flush_provider();
    return cfg;
}

std::unique_ptr<Provider> make_provider(const ProviderSpec& spec) {
    if (spec.kind == "scripted") return make_scripted_provider(spec.scripted);
    if (spec.kind == "http") return make_http_provider(spec.http);
    throw ValidationError("unknown provider kind '" + spec.kind + "'");
}

fs::path ablation_dir(const fs::path& run_dir, double temperature) {
    std::ostringstream suffix;
    suffix << run_dir.filename().string() << "-ablation-t" << temperature;
    return run_dir.parent_path() / suffix.str();
}

namespace {

RunManifest run_once(const RunConfig& config, const std::vector<Scenario>& corpus,
                     const SamplingConfig& sampling, const fs::path& out_dir) {
    std::vector<std::unique_ptr<Provider>> owned;
    std::vector<Provider*> providers;
    std::set<std::string> names;
    for (const ProviderSpec& spec : config.providers) {
        owned.push_back(make_provider(spec));
        if (!names.insert(owned.back()->config().name).second)
            throw ValidationError("duplicate provider name '" + owned.back()->config().name + "'");
        providers.push_back(owned.back().get());
    }

    PlanOptions options;
    options.envelope_version = config.envelope_version;
    options.corpus_path = config.corpus_path;
    options.corpus_hash = file_fnv_hash(config.corpus_path);
    return run_sampling_plan(providers, corpus, sampling, out_dir, options);
}

}  // namespace

RunManifest pipeline_run(const RunConfig& config) {
    if (config.providers.empty()) throw ValidationError("run config declares no providers");
    if (config.out_dir.empty()) throw ValidationError("run config has no output directory");
    {
        std::set<double> temps(config.ablation_temperatures.begin(),
                               config.ablation_temperatures.end());
        if (temps.size() != config.ablation_temperatures.size() ||
            temps.count(config.sampling.temperature))
            throw ValidationError("ablation temperatures must be distinct from the primary");
    }

    const std::vector<Scenario> corpus = load_corpus(config.corpus_path);
    const fs::path out_dir(config.out_dir);

    // Ablation twins first would also work; primary first keeps the common
    // path short when there is no ablation.
    RunManifest primary = run_once(config, corpus, config.sampling, out_dir);
    for (double t : config.ablation_temperatures) {
        SamplingConfig twin = config.sampling;
        twin.temperature = t;
        run_once(config, corpus, twin, ablation_dir(out_dir, t));
    }
    return primary;
}

namespace {

std::vector<RawTrial> parse_run(const std::vector<RawRecord>& records) {
    std::vector<RawTrial> out;
    out.reserve(records.size());
    for (const RawRecord& r : records) {
        RawTrial t;
        t.model = r.model;
        t.scenario_id = r.scenario_id;
        t.domain = r.domain;
        t.framing = r.framing;
        t.sample_index = r.sample_index;
        t.temperature = r.temperature;
        t.transport_ok = r.transport_status != "failed";
        t.parsed = parse_decision(r.raw_text);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

AuditBundle pipeline_analyze(const fs::path& run_dir, const std::optional<fs::path>& ablation,
                             double filter_floor) {
    AuditBundle bundle;
    bundle.manifest = read_manifest(run_dir);
    for (const ProviderSnapshot& p : bundle.manifest.providers)
        bundle.model_category[p.name] = p.category;

    const std::vector<RawRecord> raw = read_run_records(run_dir);
    const std::vector<RawTrial> trials = parse_run(raw);
    FilterResult filtered = quality_filter(trials, bundle.manifest.samples_per_cell, filter_floor);
    bundle.filter = filtered.report;
    bundle.records = normalize_trials(filtered.kept);

    bundle.model_nsi = group_nsi(bundle.records, Scope::model);
    bundle.domain_nsi = group_nsi(bundle.records, Scope::model_domain);
    bundle.scenario_nsi = group_nsi(bundle.records, Scope::model_scenario);
    bundle.category_nsi = group_nsi(bundle.records, Scope::category, bundle.model_category);
    for (const NsiResult& r : bundle.model_nsi)
        bundle.macro_nsi[r.model] = macro_mean_nsi(bundle.scenario_nsi, r.model);

    std::vector<std::string> models;
    for (const NsiResult& r : bundle.model_nsi) models.push_back(r.model);
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (std::size_t j = i + 1; j < models.size(); ++j) {
            for (FramingClass cls : {FramingClass::affirmative, FramingClass::negated}) {
                try {
                    bundle.agreement.push_back(
                        inter_model_agreement(bundle.records, models[i], models[j], cls));
                } catch (const NoOverlap&) {
                    // disjoint rosters in one run directory cannot happen via
                    // the gateway; skip rather than fail the whole analysis
                }
            }
        }
    }

    bundle.significance = significance_sweep(bundle.records);

    if (ablation.has_value() && fs::exists(*ablation / "manifest")) {
        AuditBundle greedy = pipeline_analyze(*ablation, std::nullopt, filter_floor);
        bundle.ablation = temperature_delta(bundle.model_nsi, greedy.model_nsi);
    }
    return bundle;
}

void write_analysis_files(const AuditBundle& bundle, const fs::path& run_dir) {
    emit_analysis_tables(bundle, run_dir / "analysis");
}

void pipeline_certify(AuditBundle& bundle, const TierThresholds& thresholds,
                      const fs::path& run_dir) {
    std::map<std::string, std::string> scenario_domain;
    for (const TrialRecord& r : bundle.records) scenario_domain[r.scenario_id] = r.domain;

    std::map<std::string, int> trials_per_model;
    for (const TrialRecord& r : bundle.records) trials_per_model[r.model] += 1;

    bundle.certifications.clear();
    for (const NsiResult& r : bundle.model_nsi) {
        bundle.certifications.push_back(certify_model(
            r.model, bundle.domain_nsi, bundle.scenario_nsi, scenario_domain, thresholds,
            bundle.manifest.run_id, trials_per_model[r.model]));
    }

    const fs::path dir = run_dir / "certification";
    fs::create_directories(dir);
    std::ofstream out(dir / "certification.txt");
    if (!out) throw IoError("cannot write certification.txt");
    for (const CertificationReport& c : bundle.certifications) {
        out << "model: " << c.model << "\n";
        out << "overall_tier: " << tier_name(c.overall_tier) << "\n";
        for (const DomainCertification& d : c.per_domain)
            out << "domain: " << d.domain << " nsi=" << fmt4(d.nsi) << " tier="
                << tier_name(d.tier) << " scenarios=" << d.n_scenarios
                << (d.coverage_shortfall ? " coverage=short" : " coverage=ok") << "\n";
        out << "worst_case: " << c.worst_scenario_id << " nsi=" << fmt4(c.worst_scenario_nsi)
            << "\n";
        out << "evidence: trials=" << c.n_trials << " max_ci_width=" << fmt4(c.max_ci_width)
            << " run=" << c.run_id << "\n";
        out << "disclosure: " << c.disclosure << "\n\n";
    }
}

AuditReport pipeline_report(const AuditBundle& bundle, const fs::path& run_dir) {
    return emit_summary(bundle, run_dir / "report");
}

}  // namespace nsa
