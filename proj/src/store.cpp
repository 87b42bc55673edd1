#include "cardaudit/store.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>

#include "cardaudit/errors.hpp"
#include "cardaudit/text.hpp"

namespace cardaudit {

using nlohmann::json;
namespace fs = std::filesystem;

bool RunManifest::operator==(const RunManifest& o) const { return to_json(*this) == to_json(o); }

std::string new_run_id() {
    static std::atomic<std::uint64_t> counter{0};
    static const std::uint64_t seed = std::random_device{}();
    auto t = format_rfc3339(now_utc());
    std::string compact;
    for (char c : t)
        if (c != '-' && c != ':') compact.push_back(c);
    auto h = text::fnv1a64(t + std::to_string(seed) + std::to_string(counter++));
    return compact + "-" + text::hex64(h).substr(0, 8);
}

json to_json(const RunManifest& m) {
    return {{"run_id", m.run_id},
            {"started_at", format_rfc3339(m.started_at)},
            {"framework_version", m.framework_version},
            {"backend_id", m.backend_id},
            {"agent_specs", m.agent_specs},
            {"agent_settings", m.agent_settings},
            {"limits", {{"max_chunks", m.limits.max_chunks}, {"timeout_ms", m.limits.timeout.count()}}},
            {"parallelism", m.parallelism},
            {"cache_stats", {{"hits", m.cache_stats.cache_hits},
                             {"misses", m.cache_stats.cache_misses},
                             {"failures", m.cache_stats.failures}}},
            {"models", m.models},
            {"failures", m.failures}};
}

RunManifest manifest_from_json(const json& j) {
    try {
        RunManifest m;
        m.run_id = j.at("run_id").get<std::string>();
        m.started_at = parse_rfc3339(j.at("started_at").get<std::string>());
        m.framework_version = j.at("framework_version").get<std::string>();
        m.backend_id = j.at("backend_id").get<std::string>();
        m.agent_specs = j.at("agent_specs").get<std::vector<std::string>>();
        m.agent_settings = j.at("agent_settings");
        m.limits.max_chunks = j.at("limits").at("max_chunks").get<std::size_t>();
        m.limits.timeout = std::chrono::milliseconds(j.at("limits").at("timeout_ms").get<long long>());
        m.parallelism = j.at("parallelism").get<std::size_t>();
        m.cache_stats.cache_hits = j.at("cache_stats").at("hits").get<std::size_t>();
        m.cache_stats.cache_misses = j.at("cache_stats").at("misses").get<std::size_t>();
        m.cache_stats.failures = j.at("cache_stats").at("failures").get<std::size_t>();
        m.models = j.value("models", std::vector<std::string>{});
        m.failures = j.value("failures", std::map<std::string, std::string>{});
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("run manifest: ") + e.what());
    }
}

namespace {

std::mutex& model_mutex(const std::string& key) {
    static std::mutex guard;
    static std::map<std::string, std::unique_ptr<std::mutex>> locks;
    std::lock_guard lock(guard);
    auto& m = locks[key];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
}

json parse_json_file(const fs::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::parse_error& e) {
        throw StorageError("corrupt JSON in " + p.string() + ": " + e.what());
    }
}

void check_model_id(const std::string& id) {
    if (id.empty() || id == "." || id == ".." || id.find('/') != std::string::npos || id.find('\\') != std::string::npos)
        throw StorageError("model id \"" + id + "\" cannot be used as a directory name");
}

}  // namespace

fs::path ReportStore::save_report(const TransparencyReport& report) const {
    check_model_id(report.model.model_id);
    const fs::path dir = root_ / "reports" / report.model.model_id;
    std::lock_guard lock(model_mutex(fs::absolute(dir).string()));

    const std::string stamp = format_rfc3339(report.created_at);
    fs::path file = dir / (stamp + ".json");
    std::error_code ec;
    for (int n = 1; fs::exists(file, ec); ++n) {
        std::string suffix = std::to_string(n);
        if (suffix.size() < 2) suffix.insert(0, "0");
        file = dir / (stamp + "_" + suffix + ".json");
    }
    write_file_atomic(file, to_json(report).dump(2) + "\n");

    auto index = read_index(report.model.model_id);
    index.push_back({fs::relative(file, root_).generic_string(), report.created_at, report.total});
    std::stable_sort(index.begin(), index.end(),
                     [](const IndexEntry& a, const IndexEntry& b) { return a.created_at < b.created_at; });
    json j = json::array();
    for (const auto& e : index)
        j.push_back({{"path", e.path}, {"created_at", format_rfc3339(e.created_at)}, {"total", e.total.to_string()}});
    write_file_atomic(dir / "index.json", j.dump(2) + "\n");
    return file;
}

TransparencyReport ReportStore::load_report(const fs::path& path) const {
    try {
        return report_from_json(parse_json_file(path));
    } catch (const ParseError& e) {
        throw StorageError(path.string() + ": " + e.what());
    }
}

std::vector<IndexEntry> ReportStore::read_index(const std::string& model_id) const {
    check_model_id(model_id);
    const fs::path p = root_ / "reports" / model_id / "index.json";
    std::error_code ec;
    if (!fs::exists(p, ec)) return {};
    auto j = parse_json_file(p);
    std::vector<IndexEntry> out;
    try {
        for (const auto& e : j)
            out.push_back({e.at("path").get<std::string>(), parse_rfc3339(e.at("created_at").get<std::string>()),
                           Points::parse(e.at("total").get<std::string>())});
    } catch (const std::exception& e) {
        throw StorageError("corrupt index " + p.string() + ": " + e.what());
    }
    return out;
}

fs::path ReportStore::save_manifest(const RunManifest& manifest) const {
    auto p = root_ / "runs" / (manifest.run_id + ".json");
    write_file_atomic(p, to_json(manifest).dump(2) + "\n");
    return p;
}

RunManifest ReportStore::load_manifest(const std::string& run_id) const {
    return manifest_from_json(parse_json_file(root_ / "runs" / (run_id + ".json")));
}

fs::path ReportStore::resolve(const std::string& model_id, const std::string& ref) const {
    std::error_code ec;
    if (fs::is_regular_file(ref, ec)) return ref;
    if (ref == "latest" || ref == "previous") {
        auto index = read_index(model_id);
        std::size_t back = ref == "latest" ? 1 : 2;
        if (index.size() < back) throw StorageError("no " + ref + " report for model \"" + model_id + "\"");
        return root_ / index[index.size() - back].path;
    }
    check_model_id(model_id);
    const fs::path dir = root_ / "reports" / model_id;
    for (const auto& candidate : {dir / ref, dir / (ref + ".json")})
        if (fs::is_regular_file(candidate, ec)) return candidate;
    throw StorageError("report \"" + ref + "\" not found for model \"" + model_id + "\"");
}

ReportDiff diff_reports(const TransparencyReport& older, const TransparencyReport& newer) {
    if (older.model.model_id != newer.model.model_id)
        throw ContractError("cannot diff reports of different models: " + older.model.model_id + " vs " +
                            newer.model.model_id);
    if (older.framework_version != newer.framework_version)
        throw ContractError("cannot diff reports of framework versions " + older.framework_version + " and " +
                            newer.framework_version);
    if (!(older.credits == newer.credits)) throw ContractError("cannot diff reports scored under different credits");

    ReportDiff d;
    d.model_id = newer.model.model_id;
    d.older_ref = format_rfc3339(older.created_at);
    d.newer_ref = format_rfc3339(newer.created_at);
    for (const auto& n : newer.subsection_scores) {
        const auto* o = older.find(n.subsection_id);
        if (!o) throw ContractError("subsection \"" + n.subsection_id + "\" missing from the older report");
        if (o->label == n.label) continue;
        LabelChange c{n.subsection_id, o->label, n.label, n.points_earned - o->points_earned};
        d.total_delta += c.delta;
        d.changed_subsections.push_back(std::move(c));
    }
    if (older.subsection_scores.size() != newer.subsection_scores.size())
        throw ContractError("reports cover different subsection sets");
    return d;
}

namespace {
std::string signed_points(Points p) { return (p > Points{} ? "+" : "") + p.to_string(); }
}  // namespace

std::string render_diff(const ReportDiff& d) {
    std::ostringstream out;
    out << d.model_id << ": " << d.older_ref << " -> " << d.newer_ref << "\n";
    if (d.changed_subsections.empty()) out << "  no label changes\n";
    for (const auto& c : d.changed_subsections)
        out << "  " << c.subsection_id << ": " << to_string(c.old_label) << " -> " << to_string(c.new_label) << " ("
            << signed_points(c.delta) << ")\n";
    out << "  total delta: " << signed_points(d.total_delta) << "\n";
    return out.str();
}

json to_json(const ReportDiff& d) {
    json changes = json::array();
    for (const auto& c : d.changed_subsections)
        changes.push_back({{"subsection_id", c.subsection_id},
                           {"old_label", to_string(c.old_label)},
                           {"new_label", to_string(c.new_label)},
                           {"delta", c.delta.to_string()}});
    return {{"model_id", d.model_id},
            {"older", d.older_ref},
            {"newer", d.newer_ref},
            {"changed_subsections", changes},
            {"total_delta", d.total_delta.to_string()}};
}

}  // namespace cardaudit
