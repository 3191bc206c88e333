#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "nsa/errors.hpp"
#include "nsa/gateway.hpp"
#include "nsa/prompt.hpp"
#include "nsa/scripted.hpp"
#include "test_support.hpp"

using namespace nsa;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "nsa_gateway_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<Scenario> mini_corpus(int n) {
    auto corpus = test::default_corpus();
    corpus.resize(static_cast<std::size_t>(n));
    return corpus;
}

PlanOptions plan_options() {
    PlanOptions o;
    o.corpus_path = NSA_CORPUS_FILE;
    o.corpus_hash = file_fnv_hash(NSA_CORPUS_FILE);
    return o;
}

// Compares the raw/ trees of two run directories byte for byte.
void check_same_raw_tree(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(a / "raw"))
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a / "raw"));
    std::sort(rel.begin(), rel.end());
    std::vector<fs::path> rel_b;
    for (const auto& e : fs::recursive_directory_iterator(b / "raw"))
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b / "raw"));
    std::sort(rel_b.begin(), rel_b.end());
    REQUIRE(rel == rel_b);
    for (const fs::path& r : rel) {
        CAPTURE(r.string());
        CHECK(slurp(a / "raw" / r) == slurp(b / "raw" / r));
    }
}

// Delegates to a scripted provider with a different worker-pool width.
class PoolWidthProvider final : public Provider {
public:
    PoolWidthProvider(ScriptedModelSpec spec, int max_concurrent)
        : inner_(make_scripted_provider(std::move(spec))) {
        cfg_ = inner_->config();
        cfg_.max_concurrent = max_concurrent;
    }
    const ProviderConfig& config() const override { return cfg_; }
    bool deterministic_transport() const override { return true; }
    CompletionResult complete(const PromptInstance& prompt, int sample_index,
                              const SamplingConfig& sampling) override {
        return inner_->complete(prompt, sample_index, sampling);
    }

private:
    std::unique_ptr<Provider> inner_;
    ProviderConfig cfg_;
};

// Delegates to a scripted provider but fails every request after the first
// `budget` completions, imitating a run that dies partway.
class DyingProvider final : public Provider {
public:
    DyingProvider(ScriptedModelSpec spec, int budget)
        : inner_(make_scripted_provider(std::move(spec))), budget_(budget) {}
    const ProviderConfig& config() const override { return inner_->config(); }
    bool deterministic_transport() const override { return true; }
    CompletionResult complete(const PromptInstance& prompt, int sample_index,
                              const SamplingConfig& sampling) override {
        if (done_.fetch_add(1) >= budget_) throw TransportError("simulated crash");
        return inner_->complete(prompt, sample_index, sampling);
    }

private:
    std::unique_ptr<Provider> inner_;
    int budget_;
    std::atomic<int> done_{0};
};

struct StubServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};
    std::atomic<int> in_flight{0};
    std::atomic<int> max_in_flight{0};

    // behavior knobs
    std::atomic<int> fail_429_first = 0;     // respond 429 to the first N requests
    std::atomic<int> fail_500_first = 0;     // respond 500 to the first N requests
    std::atomic<int> slow_first = 0;         // sleep 700ms on the first N requests
    std::atomic<int> malformed_first = 0;    // respond with junk JSON on first N
    std::atomic<int> handler_sleep_ms = 0;   // uniform handler latency
    std::atomic<bool> always_401{false};

    StubServer() {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
            const int current = in_flight.fetch_add(1) + 1;
            int expected = max_in_flight.load();
            while (current > expected && !max_in_flight.compare_exchange_weak(expected, current)) {
            }
            const int n = requests.fetch_add(1);

            if (handler_sleep_ms > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(handler_sleep_ms.load()));
            if (always_401) {
                res.status = 401;
                in_flight.fetch_sub(1);
                return;
            }
            if (n < fail_429_first) {
                res.status = 429;
                res.set_header("Retry-After", "0");
                in_flight.fetch_sub(1);
                return;
            }
            if (n < fail_500_first) {
                res.status = 500;
                in_flight.fetch_sub(1);
                return;
            }
            if (n < slow_first) std::this_thread::sleep_for(std::chrono::milliseconds(700));
            if (n < malformed_first) {
                res.set_content("{not json", "application/json");
                in_flight.fetch_sub(1);
                return;
            }

            auto body = nlohmann::json::parse(req.body);
            const std::string prompt =
                body.at("messages").at(0).at("content").get<std::string>();
            // scripted behavior keyed off polarity so parsed output is sane
            const bool negated_prompt = prompt.find("should not") != std::string::npos;
            nlohmann::json reply = {
                {"choices",
                 {{{"message",
                    {{"role", "assistant"},
                     {"content", negated_prompt ? "DISAGREE\nCONFIDENCE: 70"
                                                : "AGREE\nCONFIDENCE: 70"}}}}}}};
            res.set_content(reply.dump(), "application/json");
            in_flight.fetch_sub(1);
        });
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this]() { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        thread.join();
    }

    ProviderConfig provider_config(const std::string& name = "stub") {
        ProviderConfig cfg;
        cfg.name = name;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
        cfg.model_id = "stub-model";
        cfg.auth_env_var = "";
        cfg.max_concurrent = 4;
        cfg.requests_per_minute = 60'000'000;
        cfg.timeout_seconds = 0.4;
        cfg.max_retries = 3;
        cfg.retry_base_ms = 20;
        return cfg;
    }
};

PromptInstance sample_prompt() {
    auto corpus = mini_corpus(1);
    return render_prompt(corpus[0], FramingKind::F0, "v1");
}

}  // namespace

TEST_CASE("scripted provider: envelope-conformant text and determinism") {
    auto provider = make_scripted_provider(scripted_archetype("mirror"));
    SamplingConfig sampling;
    sampling.seed = 9;
    PromptInstance prompt = sample_prompt();
    CompletionResult a = provider->complete(prompt, 0, sampling);
    CHECK(a.transport_status == TransportStatus::ok);
    CHECK((a.raw_text.rfind("AGREE\nCONFIDENCE: ", 0) == 0 ||
           a.raw_text.rfind("DISAGREE\nCONFIDENCE: ", 0) == 0));
    CHECK(a.raw_text == provider->complete(prompt, 0, sampling).raw_text);
    CHECK(provider->deterministic_transport());

    // different seeds move the stream
    SamplingConfig other = sampling;
    other.seed = 10;
    bool any_diff = false;
    for (int i = 0; i < 50 && !any_diff; ++i)
        any_diff = provider->complete(prompt, i, sampling).raw_text !=
                   provider->complete(prompt, i, other).raw_text;
    CHECK(any_diff);
}

TEST_CASE("scripted provider: stochastic frequencies converge to the spec") {
    auto spec = scripted_archetype("ceiling");
    auto provider = make_scripted_provider(spec);
    SamplingConfig sampling;
    sampling.seed = 77;
    auto corpus = mini_corpus(1);
    for (FramingKind f : kAllFramings) {
        PromptInstance prompt = render_prompt(corpus[0], f, "v1");
        int agrees = 0;
        const int n = 2000;
        for (int i = 0; i < n; ++i)
            if (provider->complete(prompt, i, sampling).raw_text.rfind("AGREE", 0) == 0) ++agrees;
        const double freq = static_cast<double>(agrees) / n;
        CAPTURE(framing_name(f));
        CHECK(std::fabs(freq - spec.agree_probability.at(f)) <= 0.03);
    }
}

TEST_CASE("threshold-deterministic mode commits each cell") {
    auto spec = test::flat_spec("coin", 0.5, ScriptedMode::threshold_deterministic);
    auto provider = make_scripted_provider(spec);
    SamplingConfig sampling;
    sampling.seed = 4;
    auto corpus = mini_corpus(4);
    bool saw_agree_cell = false, saw_disagree_cell = false;
    for (const Scenario& s : corpus) {
        for (FramingKind f : kAllFramings) {
            PromptInstance prompt = render_prompt(s, f, "v1");
            const std::string first = provider->complete(prompt, 0, sampling).raw_text;
            for (int i = 1; i < 10; ++i)
                CHECK(provider->complete(prompt, i, sampling).raw_text == first);
            (first.rfind("AGREE", 0) == 0 ? saw_agree_cell : saw_disagree_cell) = true;
        }
    }
    // p=0.5 over 16 cells: both outcomes occur for this seed
    CHECK(saw_agree_cell);
    CHECK(saw_disagree_cell);
}

TEST_CASE("temperature zero also commits each cell for stochastic specs") {
    auto provider = make_scripted_provider(test::flat_spec("coin", 0.5));
    SamplingConfig sampling;
    sampling.seed = 4;
    sampling.temperature = 0.0;
    PromptInstance prompt = sample_prompt();
    const std::string first = provider->complete(prompt, 0, sampling).raw_text;
    for (int i = 1; i < 20; ++i)
        CHECK(provider->complete(prompt, i, sampling).raw_text == first);
}

TEST_CASE("sampling plan: counts, manifest and byte-identical reruns") {
    auto corpus = test::default_corpus();
    SamplingConfig sampling;
    sampling.samples_per_cell = 30;
    sampling.seed = 42;

    const fs::path dir_a = fresh_dir("plan_a");
    auto provider = make_scripted_provider(scripted_archetype("mirror"));
    RunManifest m = run_sampling_plan({provider.get()}, corpus, sampling, dir_a, plan_options());
    CHECK(m.planned == 1 * 14 * 4 * 30);
    CHECK(m.persisted == 1680);
    CHECK(m.failed.empty());

    RunManifest read_back = read_manifest(dir_a);
    CHECK(read_back.run_id == m.run_id);
    CHECK(read_back.persisted == 1680);

    // all records parse and carry the declared fields
    auto records = read_run_records(dir_a);
    CHECK(records.size() == 1680);
    CHECK(records.front().run_id == m.run_id);
    CHECK(records.front().envelope_version == "v1");
    CHECK(records.front().transport_status == "ok");
    CHECK(records.front().timestamp_utc == "1970-01-01T00:00:00Z");

    // rerun into a second directory: byte-identical raw tree
    const fs::path dir_b = fresh_dir("plan_b");
    auto provider2 = make_scripted_provider(scripted_archetype("mirror"));
    run_sampling_plan({provider2.get()}, corpus, sampling, dir_b, plan_options());
    check_same_raw_tree(dir_a, dir_b);

    // rerun on the completed directory: no new requests, same counts
    RunManifest m2 = run_sampling_plan({provider.get()}, corpus, sampling, dir_a, plan_options());
    CHECK(m2.persisted == 1680);
    check_same_raw_tree(dir_a, dir_b);
}

TEST_CASE("sampling plan: different worker counts produce identical files") {
    auto corpus = mini_corpus(6);
    SamplingConfig sampling;
    sampling.samples_per_cell = 8;
    sampling.seed = 13;

    auto spec = scripted_archetype("blind");
    const fs::path dir_a = fresh_dir("workers_1");
    {
        PoolWidthProvider p(spec, 1);
        run_sampling_plan({&p}, corpus, sampling, dir_a, plan_options());
    }
    const fs::path dir_b = fresh_dir("workers_2");
    {
        PoolWidthProvider p(spec, 8);
        run_sampling_plan({&p}, corpus, sampling, dir_b, plan_options());
    }
    check_same_raw_tree(dir_a, dir_b);
}

TEST_CASE("sampling plan: killed run resumes to identical results") {
    auto corpus = mini_corpus(8);
    SamplingConfig sampling;
    sampling.samples_per_cell = 6;
    sampling.seed = 3;

    // clean reference run
    const fs::path ref = fresh_dir("resume_ref");
    {
        auto p = make_scripted_provider(scripted_archetype("ceiling"));
        run_sampling_plan({p.get()}, corpus, sampling, ref, plan_options());
    }

    // dying run, then resume with a healthy provider
    const fs::path dir = fresh_dir("resume_run");
    {
        DyingProvider dying(scripted_archetype("ceiling"), 50);
        CHECK_THROWS_AS(
            run_sampling_plan({&dying}, corpus, sampling, dir, plan_options()),
            PartialRunError);
        RunManifest partial = read_manifest(dir);
        CHECK(partial.persisted < partial.planned);
        CHECK_FALSE(partial.failed.empty());
    }
    {
        auto p = make_scripted_provider(scripted_archetype("ceiling"));
        RunManifest resumed = run_sampling_plan({p.get()}, corpus, sampling, dir, plan_options());
        CHECK(resumed.persisted == resumed.planned);
        CHECK(resumed.failed.empty());
    }
    check_same_raw_tree(ref, dir);
}

TEST_CASE("resume repairs a truncated trailing line") {
    auto corpus = mini_corpus(1);
    SamplingConfig sampling;
    sampling.samples_per_cell = 5;
    sampling.seed = 21;

    const fs::path dir = fresh_dir("truncated");
    auto p = make_scripted_provider(scripted_archetype("mirror"));
    run_sampling_plan({p.get()}, corpus, sampling, dir, plan_options());

    const fs::path cell = cell_path(dir, "mirror", corpus[0].id, "F0");
    const std::string full = slurp(cell);

    // chop the last line in half, as a kill mid-write would
    std::size_t cut = full.rfind('\n', full.size() - 2);
    REQUIRE(cut != std::string::npos);
    {
        std::ofstream out(cell, std::ios::binary | std::ios::trunc);
        out << full.substr(0, cut + 1) << "{\"run_id\": \"deadbeef";
    }
    CHECK(resume_scan(cell) == 4);

    run_sampling_plan({p.get()}, corpus, sampling, dir, plan_options());
    CHECK(slurp(cell) == full);
}

TEST_CASE("run directory refuses a different plan") {
    auto corpus = mini_corpus(2);
    SamplingConfig sampling;
    sampling.samples_per_cell = 2;
    sampling.seed = 1;
    const fs::path dir = fresh_dir("mismatch");
    auto p = make_scripted_provider(scripted_archetype("mirror"));
    run_sampling_plan({p.get()}, corpus, sampling, dir, plan_options());

    SamplingConfig other = sampling;
    other.seed = 2;
    CHECK_THROWS_AS(run_sampling_plan({p.get()}, corpus, other, dir, plan_options()),
                    ValidationError);
}

TEST_CASE("http provider: 429 twice then success is retried_ok") {
    StubServer stub;
    stub.fail_429_first = 2;
    auto provider = make_http_provider(stub.provider_config());
    SamplingConfig sampling;
    CompletionResult res = provider->complete(sample_prompt(), 0, sampling);
    CHECK(res.transport_status == TransportStatus::retried_ok);
    CHECK(res.raw_text.rfind("AGREE", 0) == 0);
    CHECK(stub.requests == 3);
}

TEST_CASE("http provider: timeout then success is retried_ok") {
    StubServer stub;
    stub.slow_first = 1;
    auto provider = make_http_provider(stub.provider_config());
    SamplingConfig sampling;
    CompletionResult res = provider->complete(sample_prompt(), 0, sampling);
    CHECK(res.transport_status == TransportStatus::retried_ok);
}

TEST_CASE("http provider: malformed body then success is retried_ok") {
    StubServer stub;
    stub.malformed_first = 1;
    auto provider = make_http_provider(stub.provider_config());
    SamplingConfig sampling;
    CompletionResult res = provider->complete(sample_prompt(), 0, sampling);
    CHECK(res.transport_status == TransportStatus::retried_ok);
}

TEST_CASE("http provider: exhausted retries raise TransportError") {
    ProviderConfig cfg;
    cfg.name = "nowhere";
    cfg.base_url = "http://127.0.0.1:9/v1";  // discard port, nothing listens
    cfg.auth_env_var = "";
    cfg.max_retries = 2;
    cfg.retry_base_ms = 5;
    cfg.timeout_seconds = 0.2;
    auto provider = make_http_provider(cfg);
    SamplingConfig sampling;
    CHECK_THROWS_AS(provider->complete(sample_prompt(), 0, sampling), TransportError);
}

TEST_CASE("http provider: 401 raises AuthError without retries") {
    StubServer stub;
    stub.always_401 = true;
    auto provider = make_http_provider(stub.provider_config());
    SamplingConfig sampling;
    CHECK_THROWS_AS(provider->complete(sample_prompt(), 0, sampling), AuthError);
    CHECK(stub.requests == 1);
}

TEST_CASE("http provider: missing auth env var raises AuthError") {
    ProviderConfig cfg;
    cfg.name = "acme";
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.auth_env_var = "NSA_KEY_DEFINITELY_NOT_SET";
    CHECK_THROWS_AS(make_http_provider(cfg), AuthError);
}

TEST_CASE("429 exhaustion surfaces RateLimitExceeded") {
    StubServer stub;
    stub.fail_429_first = 100;
    ProviderConfig cfg = stub.provider_config();
    cfg.max_retries = 2;
    auto provider = make_http_provider(cfg);
    SamplingConfig sampling;
    CHECK_THROWS_AS(provider->complete(sample_prompt(), 0, sampling), RateLimitExceeded);
}

TEST_CASE("bounded concurrency: in-flight never exceeds max_concurrent") {
    StubServer stub;
    stub.handler_sleep_ms = 25;
    ProviderConfig cfg = stub.provider_config();
    cfg.max_concurrent = 3;
    auto provider = make_http_provider(cfg);

    auto corpus = mini_corpus(10);
    SamplingConfig sampling;
    sampling.samples_per_cell = 1;
    sampling.seed = 8;
    const fs::path dir = fresh_dir("bounded");
    RunManifest m = run_sampling_plan({provider.get()}, corpus, sampling, dir, plan_options());
    CHECK(m.persisted == 40);
    CHECK(stub.max_in_flight.load() <= 3);
    CHECK(stub.max_in_flight.load() >= 2);  // it did actually run concurrently
}

TEST_CASE("rate limiter paces request starts") {
    StubServer stub;
    ProviderConfig cfg = stub.provider_config();
    cfg.requests_per_minute = 1200;  // 50ms spacing
    cfg.max_concurrent = 4;
    auto provider = make_http_provider(cfg);

    auto corpus = mini_corpus(1);
    SamplingConfig sampling;
    sampling.samples_per_cell = 2;  // 8 requests total
    const fs::path dir = fresh_dir("paced");
    const auto t0 = std::chrono::steady_clock::now();
    run_sampling_plan({provider.get()}, corpus, sampling, dir, plan_options());
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    CHECK(elapsed.count() >= 7 * 50);
}
