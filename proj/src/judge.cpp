#include "cardaudit/judge.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "cardaudit/errors.hpp"
#include "cardaudit/http.hpp"
#include "cardaudit/text.hpp"

namespace cardaudit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// heuristic agent

bool is_metric_token(std::string_view token) {
    static const std::set<std::string> benchmarks = {
        "bbq", "mmlu", "truthfulqa", "humaneval", "hellaswag", "winogrande", "toxigen", "xstest",
        "strongreject", "harmbench", "realtoxicityprompts", "bold", "advbench", "simpleqa", "wmdp"};
    for (char c : token)
        if ((c >= '0' && c <= '9') || c == '%') return true;
    std::string word;
    for (char c : token)
        if (text::is_alnum(c)) word.push_back(c);
    return benchmarks.count(text::to_lower(word)) > 0;
}

HeuristicAgent::Rules HeuristicAgent::rules_for(Variant v) {
    switch (v) {
        case Variant::Lenient: return {200, 1};
        case Variant::Strict: return {800, 2};
        case Variant::Standard: break;
    }
    return {400, 1};
}

namespace {
std::string_view variant_name(HeuristicAgent::Variant v) {
    switch (v) {
        case HeuristicAgent::Variant::Lenient: return "lenient";
        case HeuristicAgent::Variant::Strict: return "strict";
        case HeuristicAgent::Variant::Standard: break;
    }
    return "standard";
}
}  // namespace

HeuristicAgent::HeuristicAgent(Variant variant, std::string agent_id)
    : variant_(variant), rules_(rules_for(variant)),
      id_(agent_id.empty() ? "heuristic:" + std::string(variant_name(variant)) : std::move(agent_id)) {}

json HeuristicAgent::settings() const {
    return {{"kind", "heuristic"},
            {"variant", variant_name(variant_)},
            {"min_chars", rules_.min_chars},
            {"min_metric_tokens", rules_.min_metric_tokens}};
}

AgentVerdict HeuristicAgent::evaluate(const EvidenceBundle& bundle, const Subsection& criteria) {
    return evaluate_keywords(bundle, criteria.keywords.empty() ? keywords_from_title(criteria.title) : criteria.keywords);
}

AgentVerdict HeuristicAgent::evaluate_keywords(const EvidenceBundle& bundle,
                                               const std::vector<std::string>& keywords) const {
    AgentVerdict v;
    v.agent_id = id_;
    std::size_t relevant_chars = 0;
    std::set<std::string> metric_tokens;
    std::set<std::string> matched;
    for (const auto& chunk : bundle.chunks) {
        const auto lower = text::to_lower(chunk.snippet);
        bool relevant = false;
        for (const auto& k : keywords)
            if (text::contains_keyword(lower, k)) {
                relevant = true;
                matched.insert(text::to_lower(k));
            }
        if (!relevant) continue;
        relevant_chars += chunk.snippet.size();
        v.cited_chunk_ranks.push_back(chunk.rank);
        std::istringstream words(chunk.snippet);
        for (std::string w; words >> w;)
            if (is_metric_token(w)) metric_tokens.insert(w);
    }

    if (v.cited_chunk_ranks.empty()) {
        v.label = Label::Absent;
        v.rationale = "no evidence chunk mentions any subsection keyword";
        return v;
    }
    std::string kw_list;
    for (const auto& k : matched) kw_list += (kw_list.empty() ? "" : ", ") + k;
    const bool long_enough = relevant_chars >= rules_.min_chars;
    const bool has_metrics = metric_tokens.size() >= rules_.min_metric_tokens;
    v.label = long_enough && has_metrics ? Label::Detailed : Label::Mentioned;
    v.rationale = "keywords [" + kw_list + "] in " + std::to_string(v.cited_chunk_ranks.size()) + " chunk(s), " +
                  std::to_string(relevant_chars) + " relevant chars (need " + std::to_string(rules_.min_chars) +
                  "), " + std::to_string(metric_tokens.size()) + " metric token(s) (need " +
                  std::to_string(rules_.min_metric_tokens) + ")";
    return v;
}

// ---------------------------------------------------------------------------
// LLM agent

std::vector<ChatMessage> render_judge_prompt(const EvidenceBundle& bundle, const Subsection& criteria) {
    std::string system =
        "You audit the public documentation of AI models for completeness. You judge only whether the "
        "evidence documents the field, not whether its claims are true.\n"
        "Labels:\n"
        "- Detailed: substantive, specific, and actionable information (concrete details, metrics, methods).\n"
        "- Mentioned: present but superficial or vague information.\n"
        "- Absent: no relevant information found.\n"
        "Reply with exactly one JSON object and nothing else:\n"
        "{\"label\": \"Absent\" | \"Mentioned\" | \"Detailed\", \"rationale\": \"<one or two sentences>\", "
        "\"citations\": [<evidence numbers supporting the label>]}";
    std::string user = "Model: " + bundle.query.model.display_name + "\nSubsection: " + criteria.title +
                       " (" + criteria.id + ")\nCriteria:\n" + criteria.criteria_prompt + "\n\nEvidence:\n";
    if (bundle.chunks.empty()) user += "(no evidence was retrieved)\n";
    for (const auto& c : bundle.chunks)
        user += "[" + std::to_string(c.rank) + "] " + c.title + " <" + c.source_url + ">\n" + c.snippet + "\n\n";
    return {{"system", std::move(system)}, {"user", std::move(user)}};
}

std::optional<ParsedReply> parse_agent_reply(std::string_view reply, const EvidenceBundle& bundle, std::string& error) {
    std::string_view body = text::trim(reply);
    if (body.substr(0, 3) == "```") {
        auto nl = body.find('\n');
        if (nl == std::string_view::npos || body.size() < 6 || body.substr(body.size() - 3) != "```") {
            error = "unterminated code fence";
            return std::nullopt;
        }
        auto tag = text::trim(body.substr(3, nl - 3));
        if (!tag.empty() && tag != "json") {
            error = "code fence must be json";
            return std::nullopt;
        }
        body = text::trim(body.substr(nl + 1, body.size() - 3 - (nl + 1)));
    }
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error&) {
        error = "reply is not a single JSON object";
        return std::nullopt;
    }
    if (!j.is_object() || j.size() != 3 || !j.contains("label") || !j.contains("rationale") || !j.contains("citations")) {
        error = "reply must have exactly the keys label, rationale, citations";
        return std::nullopt;
    }
    if (!j["label"].is_string()) {
        error = "label must be a string";
        return std::nullopt;
    }
    const auto label_text = j["label"].get<std::string>();
    ParsedReply out{};
    if (label_text == "Absent") out.label = Label::Absent;
    else if (label_text == "Mentioned") out.label = Label::Mentioned;
    else if (label_text == "Detailed") out.label = Label::Detailed;
    else {
        error = "label must be one of Absent, Mentioned, Detailed";
        return std::nullopt;
    }
    if (!j["rationale"].is_string()) {
        error = "rationale must be a string";
        return std::nullopt;
    }
    out.rationale = j["rationale"].get<std::string>();
    if (out.label != Label::Absent && text::trim(out.rationale).empty()) {
        error = "rationale must not be empty";
        return std::nullopt;
    }
    if (!j["citations"].is_array()) {
        error = "citations must be an array";
        return std::nullopt;
    }
    for (const auto& c : j["citations"]) {
        if (!c.is_number_integer()) {
            error = "citations must be integers";
            return std::nullopt;
        }
        int rank = c.get<int>();
        bool exists = std::any_of(bundle.chunks.begin(), bundle.chunks.end(), [&](const auto& ch) { return ch.rank == rank; });
        if (!exists) {
            error = "citation " + std::to_string(rank) + " does not name an evidence item";
            return std::nullopt;
        }
        out.citations.push_back(rank);
    }
    return out;
}

LlmAgent::LlmAgent(std::shared_ptr<ChatTransport> transport, LlmSettings settings, std::string agent_id)
    : transport_(std::move(transport)), settings_(std::move(settings)),
      id_(agent_id.empty() ? "llm:" + settings_.model : std::move(agent_id)) {
    if (!transport_) throw ConfigError("LLM agent needs a transport");
}

json LlmAgent::settings() const {
    return {{"kind", "llm"}, {"model", settings_.model}, {"temperature", settings_.temperature},
            {"max_reasks", kMaxReasks}};
}

AgentVerdict LlmAgent::evaluate(const EvidenceBundle& bundle, const Subsection& criteria) {
    auto messages = render_judge_prompt(bundle, criteria);
    std::string error;
    for (int attempt = 0; attempt <= kMaxReasks; ++attempt) {
        std::string reply = transport_->complete(messages, settings_);
        if (auto parsed = parse_agent_reply(reply, bundle, error)) {
            return {id_, parsed->label, std::move(parsed->rationale), std::move(parsed->citations), false};
        }
        messages.push_back({"assistant", reply});
        messages.push_back({"user", "Your reply was invalid: " + error +
                                        ". Reply again with only the JSON object {\"label\", \"rationale\", \"citations\"}."});
    }
    AgentVerdict v;
    v.agent_id = id_;
    v.abstained = true;
    v.rationale = "abstained: unparseable reply after " + std::to_string(kMaxReasks) + " re-asks (" + error + ")";
    return v;
}

HttpChatTransport::HttpChatTransport(std::string base_url, std::string api_key, int max_attempts,
                                     std::chrono::milliseconds backoff_base)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), max_attempts_(max_attempts),
      backoff_base_(backoff_base) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::shared_ptr<HttpChatTransport> HttpChatTransport::from_env() {
    const char* base = std::getenv(kBaseUrlEnv);
    const char* key = std::getenv(kApiKeyEnv);
    return std::make_shared<HttpChatTransport>(base && *base ? base : "https://api.openai.com/v1", key ? key : "");
}

std::string HttpChatTransport::complete(const std::vector<ChatMessage>& messages, const LlmSettings& settings) {
    if (api_key_.empty()) throw JudgingError(std::string("LLM API key missing; set ") + kApiKeyEnv);
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    http::Request req;
    req.url = base_url_ + "/chat/completions";
    req.body = json{{"model", settings.model}, {"messages", std::move(msgs)}, {"temperature", settings.temperature}}.dump();
    req.headers = {{"Authorization", "Bearer " + api_key_}};

    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, max_attempts_); ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(backoff_base_ * (1 << (attempt - 1)));
        http::Response resp;
        try {
            resp = http::post(req);
        } catch (const RetrievalError& e) {
            last_error = e.what();
            continue;
        }
        if (resp.status == 401 || resp.status == 403)
            throw JudgingError("LLM endpoint rejected credentials (HTTP " + std::to_string(resp.status) + ")");
        if (resp.status == 429 || resp.status >= 500) {
            last_error = "LLM endpoint HTTP " + std::to_string(resp.status);
            continue;
        }
        if (resp.status != 200) throw JudgingError("LLM endpoint HTTP " + std::to_string(resp.status));
        try {
            auto j = json::parse(resp.body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw JudgingError(std::string("LLM endpoint returned an unexpected body: ") + e.what());
        }
    }
    throw JudgingError(last_error, true);
}

// ---------------------------------------------------------------------------

AgentVerdict evaluate_subsection(const EvidenceBundle& bundle, const Subsection& criteria, JudgingAgent& agent) {
    if (bundle.subsection_id != criteria.id)
        throw ContractError("bundle for \"" + bundle.subsection_id + "\" evaluated against \"" + criteria.id + "\"");
    return agent.evaluate(bundle, criteria);
}

ConsensusResult consensus(const std::vector<AgentVerdict>& verdicts, std::string subsection_id) {
    std::vector<Label> labels;
    for (const auto& v : verdicts)
        if (!v.abstained) labels.push_back(v.label);
    if (labels.size() < 2)
        throw JudgingError("only " + std::to_string(labels.size()) + " usable verdict(s); at least 2 required");

    ConsensusResult r;
    r.subsection_id = std::move(subsection_id);
    r.verdicts = verdicts;
    int counts[3] = {0, 0, 0};
    for (auto l : labels) ++counts[static_cast<int>(l)];
    const int n = static_cast<int>(labels.size());
    for (int l = 0; l < 3; ++l) {
        if (2 * counts[l] > n) {
            r.label = static_cast<Label>(l);
            r.unanimous = counts[l] == n;
            return r;
        }
    }
    std::sort(labels.begin(), labels.end());
    r.label = labels[(labels.size() - 1) / 2];  // lower median
    r.tie_broken = true;
    return r;
}

std::map<std::string, ConsensusResult> judge_model(const std::map<std::string, EvidenceBundle>& bundles,
                                                   const Framework& framework,
                                                   const std::vector<JudgingAgent*>& agents,
                                                   const JudgeOptions& options) {
    if (agents.empty()) throw ContractError("judge_model needs at least one agent");
    const auto subs = framework.subsections();
    std::vector<ConsensusResult> results(subs.size());
    std::vector<std::unique_ptr<std::mutex>> agent_locks;
    for (std::size_t i = 0; i < agents.size(); ++i) agent_locks.push_back(std::make_unique<std::mutex>());

    parallel_for(subs.size(), options.parallelism, [&](std::size_t i) {
        const Subsection& sub = *subs[i];
        ConsensusResult unscorable;
        unscorable.subsection_id = sub.id;
        unscorable.label = Label::Absent;
        unscorable.unscorable = true;

        auto it = bundles.find(sub.id);
        if (it == bundles.end()) {
            unscorable.note = "no evidence bundle";
            results[i] = std::move(unscorable);
            return;
        }
        if (it->second.failed) {
            unscorable.note = "retrieval failed: " + it->second.error;
            results[i] = std::move(unscorable);
            return;
        }
        std::vector<AgentVerdict> verdicts;
        for (std::size_t a = 0; a < agents.size(); ++a) {
            try {
                std::unique_lock<std::mutex> lock;
                if (!agents[a]->concurrent_safe()) lock = std::unique_lock(*agent_locks[a]);
                verdicts.push_back(evaluate_subsection(it->second, sub, *agents[a]));
            } catch (const std::exception& e) {
                AgentVerdict v;
                v.agent_id = agents[a]->id();
                v.abstained = true;
                v.rationale = std::string("agent error: ") + e.what();
                verdicts.push_back(std::move(v));
            }
        }
        try {
            results[i] = consensus(verdicts, sub.id);
        } catch (const JudgingError& e) {
            unscorable.verdicts = std::move(verdicts);
            unscorable.note = e.what();
            results[i] = std::move(unscorable);
        }
    });

    std::map<std::string, ConsensusResult> out;
    for (auto& r : results) out.emplace(r.subsection_id, std::move(r));
    return out;
}

AgentPanel make_agent_panel(const std::string& specs, bool allow_small_panel, std::shared_ptr<ChatTransport> transport) {
    AgentPanel panel;
    std::size_t pos = 0;
    int index = 0;
    while (pos <= specs.size()) {
        auto comma = specs.find(',', pos);
        if (comma == std::string::npos) comma = specs.size();
        std::string spec(text::trim(std::string_view(specs).substr(pos, comma - pos)));
        pos = comma + 1;
        if (spec.empty()) throw ConfigError("empty agent spec in \"" + specs + "\"");
        ++index;
        const std::string agent_id = spec + "#" + std::to_string(index);

        if (spec == "heuristic" || spec.rfind("heuristic:", 0) == 0) {
            std::string variant = spec == "heuristic" ? "standard" : spec.substr(10);
            HeuristicAgent::Variant v;
            if (variant == "standard") v = HeuristicAgent::Variant::Standard;
            else if (variant == "lenient") v = HeuristicAgent::Variant::Lenient;
            else if (variant == "strict") v = HeuristicAgent::Variant::Strict;
            else throw ConfigError("unknown heuristic variant \"" + variant + "\"");
            panel.push_back(std::make_unique<HeuristicAgent>(v, agent_id));
        } else if (spec.rfind("llm:", 0) == 0) {
            std::string rest = spec.substr(4);
            LlmSettings s;
            auto colon = rest.find(':');
            s.model = rest.substr(0, colon);
            if (colon != std::string::npos) {
                try {
                    std::size_t used = 0;
                    s.temperature = std::stod(rest.substr(colon + 1), &used);
                    if (used != rest.size() - colon - 1) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    throw ConfigError("invalid temperature in agent spec \"" + spec + "\"");
                }
            }
            if (s.model.empty()) throw ConfigError("agent spec \"" + spec + "\" names no model");
            if (!transport) transport = HttpChatTransport::from_env();
            panel.push_back(std::make_unique<LlmAgent>(transport, s, agent_id));
        } else {
            throw ConfigError("unknown agent spec \"" + spec + "\"");
        }
        if (comma == specs.size()) break;
    }
    if (panel.size() < 3 && !allow_small_panel)
        throw ConfigError("agent panel has " + std::to_string(panel.size()) +
                          " agent(s); majority-vote consensus needs 3 (pass the small-panel override to allow fewer)");
    return panel;
}

json to_json(const AgentVerdict& v) {
    return {{"agent_id", v.agent_id},
            {"label", to_string(v.label)},
            {"rationale", v.rationale},
            {"cited_chunk_ranks", v.cited_chunk_ranks},
            {"abstained", v.abstained}};
}

AgentVerdict verdict_from_json(const json& j) {
    AgentVerdict v;
    v.agent_id = j.at("agent_id").get<std::string>();
    v.label = parse_label(j.at("label").get<std::string>());
    v.rationale = j.at("rationale").get<std::string>();
    v.cited_chunk_ranks = j.at("cited_chunk_ranks").get<std::vector<int>>();
    v.abstained = j.value("abstained", false);
    return v;
}

}  // namespace cardaudit
