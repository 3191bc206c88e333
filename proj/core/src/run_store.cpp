#include "nsa/run_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "nsa/errors.hpp"
#include "nsa/hash.hpp"

namespace nsa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '.' || c == '_' || c == '-';
        if (!ok) c = '_';
    }
    return out;
}

json provider_to_json(const ProviderSnapshot& p) {
    return json{{"name", p.name},
                {"kind", p.kind},
                {"base_url", p.base_url},
                {"model_id", p.model_id},
                {"category", p.category}};
}

ProviderSnapshot provider_from_json(const json& j) {
    ProviderSnapshot p;
    p.name = j.at("name").get<std::string>();
    p.kind = j.at("kind").get<std::string>();
    p.base_url = j.at("base_url").get<std::string>();
    p.model_id = j.at("model_id").get<std::string>();
    p.category = j.at("category").get<std::string>();
    return p;
}

json identity_json(const RunManifest& m) {
    json providers = json::array();
    for (const auto& p : m.providers) providers.push_back(provider_to_json(p));
    return json{{"corpus_path", m.corpus_path}, {"corpus_hash", m.corpus_hash},
                {"n_scenarios", m.n_scenarios}, {"envelope_version", m.envelope_version},
                {"temperature", m.temperature}, {"samples_per_cell", m.samples_per_cell},
                {"seed", m.seed},               {"providers", providers}};
}

}  // namespace

std::string compute_run_id(const RunManifest& m) {
    return to_hex(fnv1a64(identity_json(m).dump()));
}

std::string serialize_record(const RawRecord& r) {
    json j{{"run_id", r.run_id},
           {"timestamp_utc", r.timestamp_utc},
           {"model", r.model},
           {"provider", r.provider},
           {"scenario_id", r.scenario_id},
           {"domain", r.domain},
           {"framing", r.framing},
           {"sample_index", r.sample_index},
           {"temperature", r.temperature},
           {"envelope_version", r.envelope_version},
           {"prompt_hash", r.prompt_hash},
           {"raw_text", r.raw_text},
           {"latency_ms", r.latency_ms},
           {"transport_status", r.transport_status}};
    return j.dump();
}

RawRecord deserialize_record(const std::string& line, const std::string& origin, int lineno) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(origin + ":" + std::to_string(lineno) + ": corrupt record line: " + e.what());
    }
    try {
        RawRecord r;
        r.run_id = j.at("run_id").get<std::string>();
        r.timestamp_utc = j.at("timestamp_utc").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.provider = j.at("provider").get<std::string>();
        r.scenario_id = j.at("scenario_id").get<std::string>();
        r.domain = j.at("domain").get<std::string>();
        r.framing = j.at("framing").get<std::string>();
        r.sample_index = j.at("sample_index").get<int>();
        r.temperature = j.at("temperature").get<double>();
        r.envelope_version = j.at("envelope_version").get<std::string>();
        r.prompt_hash = j.at("prompt_hash").get<std::string>();
        r.raw_text = j.at("raw_text").get<std::string>();
        r.latency_ms = j.at("latency_ms").get<std::int64_t>();
        r.transport_status = j.at("transport_status").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(origin + ":" + std::to_string(lineno) + ": record missing field: " + e.what());
    }
}

void write_manifest(const fs::path& run_dir, const RunManifest& m) {
    json failed = json::array();
    for (const auto& f : m.failed)
        failed.push_back(json{{"model", f.model},
                              {"scenario_id", f.scenario_id},
                              {"framing", f.framing},
                              {"sample_index", f.sample_index},
                              {"error", f.error}});
    json j{{"run_id", m.run_id},
           {"identity", identity_json(m)},
           {"counts", json{{"planned", m.planned}, {"persisted", m.persisted},
                           {"failed", static_cast<std::int64_t>(m.failed.size())}}},
           {"failed_keys", failed},
           {"timing", json{{"started_utc", m.started_utc}, {"wall_ms", m.wall_ms}}}};
    std::ofstream out(run_dir / "manifest");
    if (!out) throw IoError("cannot write manifest in " + run_dir.string());
    out << j.dump(2) << "\n";
}

RunManifest read_manifest(const fs::path& run_dir) {
    std::ifstream in(run_dir / "manifest");
    if (!in) throw IoError("no manifest in " + run_dir.string() + " (is this a run directory?)");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError((run_dir / "manifest").string() + ": " + e.what());
    }
    try {
        RunManifest m;
        m.run_id = j.at("run_id").get<std::string>();
        const json& id = j.at("identity");
        m.corpus_path = id.at("corpus_path").get<std::string>();
        m.corpus_hash = id.at("corpus_hash").get<std::string>();
        m.n_scenarios = id.at("n_scenarios").get<int>();
        m.envelope_version = id.at("envelope_version").get<std::string>();
        m.temperature = id.at("temperature").get<double>();
        m.samples_per_cell = id.at("samples_per_cell").get<int>();
        m.seed = id.at("seed").get<std::uint64_t>();
        for (const json& p : id.at("providers")) m.providers.push_back(provider_from_json(p));
        m.planned = j.at("counts").at("planned").get<std::int64_t>();
        m.persisted = j.at("counts").at("persisted").get<std::int64_t>();
        for (const json& f : j.at("failed_keys")) {
            FailedKey k;
            k.model = f.at("model").get<std::string>();
            k.scenario_id = f.at("scenario_id").get<std::string>();
            k.framing = f.at("framing").get<std::string>();
            k.sample_index = f.at("sample_index").get<int>();
            k.error = f.at("error").get<std::string>();
            m.failed.push_back(std::move(k));
        }
        m.started_utc = j.at("timing").at("started_utc").get<std::string>();
        m.wall_ms = j.at("timing").at("wall_ms").get<std::int64_t>();
        return m;
    } catch (const json::exception& e) {
        throw ParseError((run_dir / "manifest").string() + ": missing field: " + e.what());
    }
}

fs::path cell_path(const fs::path& run_dir, const std::string& model,
                   const std::string& scenario_id, const std::string& framing) {
    return run_dir / "raw" / sanitize(model) / (sanitize(scenario_id) + "__" + framing + ".records");
}

int resume_scan(const fs::path& cell_file) {
    std::ifstream in(cell_file, std::ios::binary);
    if (!in) return 0;

    int complete = 0;
    std::uintmax_t good_bytes = 0;
    std::string line;
    while (std::getline(in, line)) {
        const bool has_newline = !in.eof();
        const bool parses = has_newline && !json::parse(line, nullptr, false).is_discarded();
        if (!parses) break;  // partial or corrupt tail: resume before it
        complete += 1;
        good_bytes += line.size() + 1;
    }
    in.close();

    if (fs::file_size(cell_file) != good_bytes) fs::resize_file(cell_file, good_bytes);
    return complete;
}

void append_record(const fs::path& cell_file, const RawRecord& r) {
    std::ofstream out(cell_file, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to " + cell_file.string());
    out << serialize_record(r) << "\n";
    out.flush();
    if (!out) throw IoError("write failure on " + cell_file.string());
}

std::vector<RawRecord> read_run_records(const fs::path& run_dir) {
    const fs::path raw = run_dir / "raw";
    if (!fs::is_directory(raw)) throw IoError("no raw/ directory in " + run_dir.string());

    std::vector<fs::path> files;
    for (const auto& model_dir : fs::directory_iterator(raw)) {
        if (!model_dir.is_directory()) continue;
        for (const auto& f : fs::directory_iterator(model_dir.path()))
            if (f.path().extension() == ".records") files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<RawRecord> records;
    for (const fs::path& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError("cannot read " + file.string());
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            records.push_back(deserialize_record(line, file.string(), lineno));
        }
    }
    return records;
}

std::string file_fnv_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return to_hex(fnv1a64(buf.str()));
}

}  // namespace nsa
