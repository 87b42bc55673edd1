#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cardaudit/retrieve.hpp"
#include "cardaudit/score.hpp"

namespace cardaudit {

struct RunManifest {
    std::string run_id;
    Timestamp started_at{};
    std::string framework_version;
    std::string backend_id;
    std::vector<std::string> agent_specs;
    nlohmann::json agent_settings = nlohmann::json::array();  // one entry per agent
    RetrievalLimits limits;
    std::size_t parallelism = 4;
    RetrievalStats cache_stats;
    std::vector<std::string> models;
    std::map<std::string, std::string> failures;  // model id -> error

    bool operator==(const RunManifest& o) const;
};

/// "<UTC timestamp>-<8 hex>", unique per call within a process.
std::string new_run_id();

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

struct IndexEntry {
    std::string path;  // relative to the store root
    Timestamp created_at{};
    Points total;

    bool operator==(const IndexEntry&) const = default;
};

/// Flat-file JSON store:
///   <root>/reports/<model_id>/<created_at>.json
///   <root>/reports/<model_id>/index.json
///   <root>/runs/<run_id>.json
/// Writes go through temp file + rename. One writer per model directory.
class ReportStore {
public:
    explicit ReportStore(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const { return root_; }

    /// Returns the path written. Throws StorageError.
    std::filesystem::path save_report(const TransparencyReport& report) const;
    TransparencyReport load_report(const std::filesystem::path& path) const;
    std::vector<IndexEntry> read_index(const std::string& model_id) const;

    std::filesystem::path save_manifest(const RunManifest& manifest) const;
    RunManifest load_manifest(const std::string& run_id) const;

    /// An existing file path, a file name or stem under reports/<model_id>/, or "latest"/"previous".
    /// Throws StorageError when nothing matches.
    std::filesystem::path resolve(const std::string& model_id, const std::string& ref) const;

private:
    std::filesystem::path root_;
};

struct LabelChange {
    std::string subsection_id;
    Label old_label = Label::Absent;
    Label new_label = Label::Absent;
    Points delta;  // new points_earned - old points_earned

    bool operator==(const LabelChange&) const = default;
};

struct ReportDiff {
    std::string model_id;
    std::string older_ref;  // created_at of each report
    std::string newer_ref;
    std::vector<LabelChange> changed_subsections;
    Points total_delta;
};

/// Throws ContractError for different models, framework versions or credit policies.
ReportDiff diff_reports(const TransparencyReport& older, const TransparencyReport& newer);

std::string render_diff(const ReportDiff& d);
nlohmann::json to_json(const ReportDiff& d);

}  // namespace cardaudit
