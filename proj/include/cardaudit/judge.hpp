#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cardaudit/retrieve.hpp"
#include "cardaudit/schema.hpp"

namespace cardaudit {

struct AgentVerdict {
    std::string agent_id;
    Label label = Label::Absent;
    std::string rationale;
    std::vector<int> cited_chunk_ranks;
    bool abstained = false;  // excluded from consensus

    bool operator==(const AgentVerdict&) const = default;
};

struct ConsensusResult {
    std::string subsection_id;
    Label label = Label::Absent;
    std::vector<AgentVerdict> verdicts;
    bool unanimous = false;
    bool tie_broken = false;
    /// Judging failed (too few verdicts, retrieval failure, missing bundle). Scores as Absent.
    bool unscorable = false;
    std::string note;

    bool operator==(const ConsensusResult&) const = default;
};

class JudgingAgent {
public:
    virtual ~JudgingAgent() = default;
    virtual std::string id() const = 0;
    /// Throws JudgingError (retryable) on transport failure.
    virtual AgentVerdict evaluate(const EvidenceBundle& bundle, const Subsection& criteria) = 0;
    /// Recorded in the run manifest.
    virtual nlohmann::json settings() const = 0;
    /// False when calls must not overlap; judge_model then serializes them.
    virtual bool concurrent_safe() const { return true; }
};

/// Deterministic rules: Absent when no chunk carries a subsection keyword; otherwise Mentioned,
/// upgraded to Detailed when keyword-bearing snippet text reaches `min_chars` and at least
/// `min_metric_tokens` numeric/metric tokens appear in it.
class HeuristicAgent final : public JudgingAgent {
public:
    enum class Variant { Standard, Lenient, Strict };

    struct Rules {
        std::size_t min_chars;
        std::size_t min_metric_tokens;
    };
    static Rules rules_for(Variant v);

    explicit HeuristicAgent(Variant variant = Variant::Standard, std::string agent_id = {});
    std::string id() const override { return id_; }
    AgentVerdict evaluate(const EvidenceBundle& bundle, const Subsection& criteria) override;
    nlohmann::json settings() const override;

    AgentVerdict evaluate_keywords(const EvidenceBundle& bundle, const std::vector<std::string>& keywords) const;

private:
    Variant variant_;
    Rules rules_;
    std::string id_;
};

/// True for tokens with a digit or '%', or a known benchmark name.
bool is_metric_token(std::string_view token);

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

struct LlmSettings {
    std::string model;
    double temperature = 0.0;
};

class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    /// Returns the assistant reply text. Throws JudgingError (retryable) on transport failure.
    virtual std::string complete(const std::vector<ChatMessage>& messages, const LlmSettings& settings) = 0;
    virtual bool concurrent_safe() const { return true; }
};

/// Chat-completions style endpoint: POST <base_url>/chat/completions.
class HttpChatTransport final : public ChatTransport {
public:
    static constexpr const char* kBaseUrlEnv = "CARDAUDIT_LLM_BASE_URL";
    static constexpr const char* kApiKeyEnv = "CARDAUDIT_LLM_API_KEY";

    HttpChatTransport(std::string base_url, std::string api_key, int max_attempts = 3,
                      std::chrono::milliseconds backoff_base = std::chrono::milliseconds(500));
    static std::shared_ptr<HttpChatTransport> from_env();
    std::string complete(const std::vector<ChatMessage>& messages, const LlmSettings& settings) override;

private:
    std::string base_url_;
    std::string api_key_;
    int max_attempts_;
    std::chrono::milliseconds backoff_base_;
};

struct ParsedReply {
    Label label;
    std::string rationale;
    std::vector<int> citations;
};

/// Strict reply grammar: one JSON object with exactly "label", "rationale", "citations"
/// (optionally wrapped in a single ```json fence). Citations must name ranks in `bundle`.
/// Returns the failure reason in `error` when the reply does not conform.
std::optional<ParsedReply> parse_agent_reply(std::string_view reply, const EvidenceBundle& bundle, std::string& error);

std::vector<ChatMessage> render_judge_prompt(const EvidenceBundle& bundle, const Subsection& criteria);

class LlmAgent final : public JudgingAgent {
public:
    static constexpr int kMaxReasks = 2;

    LlmAgent(std::shared_ptr<ChatTransport> transport, LlmSettings settings, std::string agent_id = {});
    std::string id() const override { return id_; }
    AgentVerdict evaluate(const EvidenceBundle& bundle, const Subsection& criteria) override;
    nlohmann::json settings() const override;
    bool concurrent_safe() const override { return transport_->concurrent_safe(); }

private:
    std::shared_ptr<ChatTransport> transport_;
    LlmSettings settings_;
    std::string id_;
};

/// Throws ContractError if the bundle belongs to another subsection.
AgentVerdict evaluate_subsection(const EvidenceBundle& bundle, const Subsection& criteria, JudgingAgent& agent);

/// Majority vote over non-abstaining verdicts. Without a strict majority the lower median wins
/// (three distinct labels -> Mentioned; two disagreeing -> the lower). Throws JudgingError with
/// fewer than two usable verdicts.
ConsensusResult consensus(const std::vector<AgentVerdict>& verdicts, std::string subsection_id = {});

struct JudgeOptions {
    std::size_t parallelism = 4;
};

/// One result per framework subsection; failures become unscorable results.
std::map<std::string, ConsensusResult> judge_model(const std::map<std::string, EvidenceBundle>& bundles,
                                                   const Framework& framework,
                                                   const std::vector<JudgingAgent*>& agents,
                                                   const JudgeOptions& options = {});

using AgentPanel = std::vector<std::unique_ptr<JudgingAgent>>;

/// Comma-separated specs: `heuristic[:standard|lenient|strict]` or `llm:<model>[:<temperature>]`.
/// Throws ConfigError on unknown specs or, unless `allow_small_panel`, fewer than three agents.
AgentPanel make_agent_panel(const std::string& specs, bool allow_small_panel = false,
                            std::shared_ptr<ChatTransport> transport = nullptr);

nlohmann::json to_json(const AgentVerdict& v);
AgentVerdict verdict_from_json(const nlohmann::json& j);

}  // namespace cardaudit
