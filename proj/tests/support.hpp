#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cardaudit/pipeline.hpp"

namespace testsupport {

inline std::filesystem::path fixtures() { return CARDAUDIT_FIXTURES; }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("cardaudit_" + tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Subsection weights in tenths of a point, copied by hand from the rubric table.
inline const std::map<std::string, long long>& rubric_tenths() {
    static const std::map<std::string, long long> t = {
        {"model_details.model_overview", 30},        {"model_details.organization", 10},
        {"model_details.model_version", 20},         {"model_details.release_date", 5},
        {"model_details.version_progression", 10},   {"model_details.model_architecture", 40},
        {"model_details.model_dependencies", 10},    {"model_details.paper_and_links", 5},
        {"model_details.distribution_forms", 20},    {"inputs_outputs.inputs", 20},
        {"inputs_outputs.outputs", 20},              {"inputs_outputs.token_count", 20},
        {"model_data.training_dataset", 70},         {"model_data.training_data_processing", 60},
        {"model_data.knowledge_count", 20},          {"implementation_sustainability.hardware", 20},
        {"implementation_sustainability.software_frameworks", 20},
        {"implementation_sustainability.energy_use", 10},
        {"intended_use.primary_uses", 50},           {"intended_use.primary_users", 20},
        {"intended_use.out_of_scope", 30},           {"critical_risk.cbrn", 50},
        {"critical_risk.cyber_risk", 50},            {"critical_risk.harmful_manipulation", 40},
        {"critical_risk.child_safety", 40},          {"critical_risk.privacy_risks", 20},
        {"safety_evaluation.refusals", 10},          {"safety_evaluation.disallowed_content", 40},
        {"safety_evaluation.sycophancy", 20},        {"safety_evaluation.jailbreak", 40},
        {"safety_evaluation.hallucinations", 40},    {"safety_evaluation.deception_behaviors", 40},
        {"safety_evaluation.fairness_bias", 30},     {"safety_evaluation.adversarial_robustness", 20},
        {"safety_evaluation.red_teaming", 10},       {"risk_mitigations.risk_mitigation", 40},
    };
    return t;
}

/// Credit in thousandths for the default policy.
inline long long default_credit_permille(cardaudit::Label l) {
    return l == cardaudit::Label::Detailed ? 1000 : l == cardaudit::Label::Mentioned ? 500 : 0;
}

inline cardaudit::ConsensusResult fixed_label(const std::string& id, cardaudit::Label l) {
    cardaudit::ConsensusResult c;
    c.subsection_id = id;
    c.label = l;
    c.unanimous = true;
    return c;
}

/// Every subsection of `f` gets the label chosen by `pick(subsection_id)`.
template <class Pick>
std::map<std::string, cardaudit::ConsensusResult> label_all(const cardaudit::Framework& f, Pick pick) {
    std::map<std::string, cardaudit::ConsensusResult> out;
    for (const auto* s : f.subsections()) out[s->id] = fixed_label(s->id, pick(s->id));
    return out;
}

inline cardaudit::Label random_label(std::mt19937_64& rng) {
    return static_cast<cardaudit::Label>(std::uniform_int_distribution<int>(0, 2)(rng));
}

inline cardaudit::ModelIdentity model(const std::string& id, const std::string& provider = "lab") {
    return {id, id, provider, std::nullopt};
}

struct FleetMember {
    cardaudit::ModelIdentity model;
    std::map<std::string, cardaudit::Label> labels;
};

/// Ten models across four providers with seeded random labels.
inline std::vector<FleetMember> synthetic_fleet(std::uint64_t seed, std::size_t n = 10) {
    static const char* providers[] = {"alpha", "beta", "gamma", "delta"};
    std::mt19937_64 rng(seed);
    std::vector<FleetMember> out;
    for (std::size_t i = 0; i < n; ++i) {
        FleetMember m;
        m.model = model("model-" + std::to_string(i), providers[i % 4]);
        for (const auto* s : cardaudit::builtin_framework().subsections()) m.labels[s->id] = random_label(rng);
        out.push_back(std::move(m));
    }
    return out;
}

/// Drops run-specific fields (creation and retrieval times, run id) from a report JSON tree.
inline void strip_volatile(nlohmann::json& j) {
    if (j.is_object()) {
        for (const char* k : {"created_at", "retrieved_at", "run_manifest_ref"}) j.erase(k);
        for (auto& [k, v] : j.items()) strip_volatile(v);
    } else if (j.is_array()) {
        for (auto& v : j) strip_volatile(v);
    }
}

inline std::vector<cardaudit::TransparencyReport> fleet_reports(const std::vector<FleetMember>& fleet) {
    std::vector<cardaudit::TransparencyReport> out;
    for (const auto& m : fleet)
        out.push_back(cardaudit::aggregate(label_all(cardaudit::builtin_framework(), [&](const std::string& id) {
                                               return m.labels.at(id);
                                           }),
                                           cardaudit::builtin_framework(), m.model));
    return out;
}

}  // namespace testsupport
