#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cardaudit/fixed_point.hpp"
#include "cardaudit/judge.hpp"
#include "cardaudit/retrieve.hpp"
#include "cardaudit/schema.hpp"
#include "cardaudit/util.hpp"

namespace cardaudit {

inline constexpr const char* kReportSchemaVersion = "1.0";

struct EvidenceRef {
    int rank = 0;
    std::string source_url;
    std::string title;
    Timestamp retrieved_at{};

    bool operator==(const EvidenceRef&) const = default;
};

struct SubsectionScore {
    std::string subsection_id;
    std::string section_id;
    Weight weight;
    Label label = Label::Absent;
    Credit credit;
    Points points_earned;  // weight x credit
    Points points_lost;    // weight - points_earned

    // provenance
    bool unscorable = false;
    std::string note;
    bool unanimous = false;
    bool tie_broken = false;
    std::vector<AgentVerdict> verdicts;
    std::vector<EvidenceRef> evidence;

    bool operator==(const SubsectionScore&) const = default;
};

struct SectionTotal {
    std::string section_id;
    std::string title;
    Weight weight;
    Points points;

    bool operator==(const SectionTotal&) const = default;
};

struct TransparencyReport {
    std::string schema_version = kReportSchemaVersion;
    ModelIdentity model;
    std::string framework_version;
    CreditPolicy credits;
    std::vector<SubsectionScore> subsection_scores;  // framework order
    std::vector<SectionTotal> section_totals;        // framework order
    Points total;
    Timestamp created_at{};
    std::string run_manifest_ref;

    const SubsectionScore* find(std::string_view subsection_id) const;
    std::size_t unscorable_count() const;
    std::size_t tie_broken_count() const;

    bool operator==(const TransparencyReport&) const = default;
};

/// Under the framework's credit policy (default Detailed 1.0, Mentioned 0.5, Absent 0.0).
Credit credit_of(Label label, const CreditPolicy& policy = {});

/// Weighted total of all subsections. `evidence`, when given, is cited per subsection.
/// Throws ContractError if a framework subsection has no entry in `labels`.
TransparencyReport aggregate(const std::map<std::string, ConsensusResult>& labels, const Framework& framework,
                             const ModelIdentity& model,
                             const std::map<std::string, EvidenceBundle>* evidence = nullptr);

/// Sum of points_lost per subsection across reports. Throws ContractError on mixed framework versions.
std::map<std::string, Points> point_loss_by_subsection(const std::vector<TransparencyReport>& reports);

enum class ProviderAggregation { Mean, Best };

/// Per-provider total, rounded half away from zero to one decimal.
std::map<std::string, Points> provider_compliance(const std::vector<TransparencyReport>& reports,
                                                  ProviderAggregation mode = ProviderAggregation::Mean);

struct PresenceStats {
    std::size_t models = 0;
    std::size_t detailed = 0;
    std::size_t mentioned = 0;
    std::size_t absent = 0;

    std::size_t present() const { return detailed + mentioned; }
    double presence_rate() const { return models ? static_cast<double>(present()) / static_cast<double>(models) : 0.0; }
    bool operator==(const PresenceStats&) const = default;
};

/// (model_id, concept) -> label. A model with no entry for a concept counts as Absent.
using JudgmentMatrix = std::map<std::pair<std::string, std::string>, Label>;

std::map<std::string, PresenceStats> presence_stats(const JudgmentMatrix& judgments);

struct FleetAnalytics {
    std::map<std::string, PresenceStats> presence;  // concept (subsection id) -> stats
    std::map<std::string, Points> point_loss;
    std::map<std::string, Points> provider_compliance;
};

FleetAnalytics fleet_analytics(const std::vector<TransparencyReport>& reports,
                               ProviderAggregation mode = ProviderAggregation::Mean);

// CSV exports. `order` fixes row order; keys missing from it follow alphabetically.
std::string presence_csv(const std::map<std::string, PresenceStats>& presence,
                         const std::vector<std::string>& order = {});
std::string point_loss_csv(const std::map<std::string, Points>& loss, const Framework& framework);
std::string provider_compliance_csv(const std::map<std::string, Points>& compliance,
                                    const std::vector<TransparencyReport>& reports);
std::string csv_escape(std::string_view field);

nlohmann::json to_json(const TransparencyReport& r);
TransparencyReport report_from_json(const nlohmann::json& j);  // throws ParseError

/// Terminal summary: total, section subtotals, tie-broken and unscorable counts.
std::string render_summary(const TransparencyReport& r);

}  // namespace cardaudit
