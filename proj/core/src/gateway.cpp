#include "nsa/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <ctime>
#include <mutex>
#include <random>
#include <thread>

#include "nsa/errors.hpp"
#include "nsa/hash.hpp"
#include "nsa/prompt.hpp"

namespace nsa {

namespace fs = std::filesystem;

namespace {

std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

constexpr const char* kEpochIso = "1970-01-01T00:00:00Z";

// Spaces request starts so one provider never exceeds its requests/minute.
class RateLimiter {
public:
    explicit RateLimiter(int requests_per_minute)
        : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
              std::chrono::duration<double>(60.0 / requests_per_minute))),
          next_(std::chrono::steady_clock::now()) {}

    void acquire() {
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard<std::mutex> lock(mu_);
            const auto now = std::chrono::steady_clock::now();
            slot = std::max(next_, now);
            next_ = slot + interval_;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    std::chrono::steady_clock::duration interval_;
    std::chrono::steady_clock::time_point next_;
    std::mutex mu_;
};

struct Cell {
    const Scenario* scenario;
    FramingKind framing;
};

ProviderSnapshot snapshot(const Provider& p) {
    ProviderSnapshot s;
    s.name = p.config().name;
    s.kind = p.deterministic_transport() ? "scripted" : "http";
    s.base_url = p.config().base_url;
    s.model_id = p.config().model_id;
    s.category = p.config().category;
    return s;
}

}  // namespace

RunManifest run_sampling_plan(const std::vector<Provider*>& providers,
                              const std::vector<Scenario>& corpus, const SamplingConfig& sampling,
                              const fs::path& run_dir, const PlanOptions& options) {
    if (providers.empty()) throw ValidationError("run_sampling_plan: no providers");
    if (corpus.empty()) throw ValidationError("run_sampling_plan: empty corpus");
    if (sampling.samples_per_cell < 1)
        throw ValidationError("run_sampling_plan: samples_per_cell must be >= 1");
    if (!envelope_registered(options.envelope_version))
        throw TemplateError("unregistered envelope version '" + options.envelope_version + "'");

    const auto wall_start = std::chrono::steady_clock::now();

    RunManifest manifest;
    manifest.corpus_path = options.corpus_path;
    manifest.corpus_hash = options.corpus_hash;
    manifest.n_scenarios = static_cast<int>(corpus.size());
    manifest.envelope_version = options.envelope_version;
    manifest.temperature = sampling.temperature;
    manifest.samples_per_cell = sampling.samples_per_cell;
    manifest.seed = sampling.seed;
    for (const Provider* p : providers) manifest.providers.push_back(snapshot(*p));
    manifest.run_id = compute_run_id(manifest);
    manifest.planned = static_cast<std::int64_t>(providers.size()) * corpus.size() *
                       kAllFramings.size() * sampling.samples_per_cell;
    manifest.started_utc = utc_now_iso();

    fs::create_directories(run_dir / "raw");
    for (const Provider* p : providers)
        fs::create_directories(cell_path(run_dir, p->config().name, "x", "F0").parent_path());

    // A run directory is bound to one plan identity; resuming with a
    // different configuration would silently mix incompatible records.
    const fs::path id_file = run_dir / "run_id";
    if (fs::exists(id_file)) {
        std::ifstream in(id_file);
        std::string existing;
        in >> existing;
        if (existing != manifest.run_id)
            throw ValidationError("run directory " + run_dir.string() +
                                  " belongs to a different plan (run_id " + existing + ")");
    } else {
        std::ofstream out(id_file);
        out << manifest.run_id << "\n";
    }

    std::atomic<std::int64_t> persisted{0};
    std::mutex failures_mu;
    std::vector<FailedKey> failures;
    std::atomic<std::int64_t> progress_done{0};

    std::vector<std::thread> threads;
    std::vector<std::unique_ptr<RateLimiter>> limiters;

    for (Provider* provider : providers) {
        auto cells = std::make_shared<std::vector<Cell>>();
        for (const Scenario& s : corpus)
            for (FramingKind f : kAllFramings) cells->push_back({&s, f});

        // Seeded shuffle decorrelates provider-side drift from cell identity.
        std::mt19937_64 rng(fnv1a64(provider->config().name, fnv1a64(sampling.seed)));
        std::shuffle(cells->begin(), cells->end(), rng);

        limiters.push_back(std::make_unique<RateLimiter>(provider->config().requests_per_minute));
        RateLimiter* limiter = limiters.back().get();

        auto next_cell = std::make_shared<std::atomic<std::size_t>>(0);
        const int workers =
            std::min<int>(provider->config().max_concurrent, static_cast<int>(cells->size()));

        for (int w = 0; w < workers; ++w) {
            threads.emplace_back([&, provider, cells, next_cell, limiter]() {
                const bool deterministic = provider->deterministic_transport();
                const std::string& model = provider->config().name;
                const std::string provider_label =
                    deterministic ? std::string("scripted") : provider->config().base_url;
                while (true) {
                    const std::size_t i = next_cell->fetch_add(1);
                    if (i >= cells->size()) return;
                    const Cell& cell = (*cells)[i];
                    const std::string framing_str(framing_name(cell.framing));
                    const fs::path file = cell_path(run_dir, model, cell.scenario->id, framing_str);

                    PromptInstance prompt;
                    try {
                        prompt = render_prompt(*cell.scenario, cell.framing, options.envelope_version);
                    } catch (const Error& e) {
                        std::lock_guard<std::mutex> lock(failures_mu);
                        failures.push_back({model, cell.scenario->id, framing_str, 0, e.what()});
                        continue;
                    }

                    int start = resume_scan(file);
                    if (start > sampling.samples_per_cell) start = sampling.samples_per_cell;
                    persisted.fetch_add(start);
                    progress_done.fetch_add(start);

                    for (int idx = start; idx < sampling.samples_per_cell; ++idx) {
                        try {
                            limiter->acquire();
                            CompletionResult res = provider->complete(prompt, idx, sampling);

                            RawRecord rec;
                            rec.run_id = manifest.run_id;
                            rec.timestamp_utc = deterministic ? kEpochIso : utc_now_iso();
                            rec.model = model;
                            rec.provider = provider_label;
                            rec.scenario_id = cell.scenario->id;
                            rec.domain = cell.scenario->domain;
                            rec.framing = framing_str;
                            rec.sample_index = idx;
                            rec.temperature = sampling.temperature;
                            rec.envelope_version = options.envelope_version;
                            rec.prompt_hash = to_hex(prompt.prompt_hash);
                            rec.raw_text = res.raw_text;
                            rec.latency_ms = deterministic ? 0 : res.latency_ms;
                            rec.transport_status = std::string(
                                transport_status_name(res.transport_status));
                            append_record(file, rec);
                            persisted.fetch_add(1);
                            const std::int64_t done = progress_done.fetch_add(1) + 1;
                            if (options.on_progress) options.on_progress(done, manifest.planned);
                        } catch (const Error& e) {
                            // Keep record files a contiguous sample prefix:
                            // stop this cell and let a future resume retry.
                            std::lock_guard<std::mutex> lock(failures_mu);
                            failures.push_back({model, cell.scenario->id, framing_str, idx, e.what()});
                            break;
                        }
                    }
                }
            });
        }
    }
    for (std::thread& t : threads) t.join();

    manifest.persisted = persisted.load();
    std::sort(failures.begin(), failures.end(), [](const FailedKey& a, const FailedKey& b) {
        return std::tie(a.model, a.scenario_id, a.framing, a.sample_index) <
               std::tie(b.model, b.scenario_id, b.framing, b.sample_index);
    });
    manifest.failed = std::move(failures);
    manifest.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - wall_start)
                           .count();
    write_manifest(run_dir, manifest);

    if (!manifest.failed.empty())
        throw PartialRunError("sampling plan incomplete: " + std::to_string(manifest.failed.size()) +
                                  " keys failed after retries (see manifest)",
                              manifest.failed.size());
    return manifest;
}

}  // namespace nsa
