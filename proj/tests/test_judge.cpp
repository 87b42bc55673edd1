#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <doctest.h>
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <deque>
#include <thread>

#include "cardaudit/errors.hpp"
#include "cardaudit/judge.hpp"
#include "support.hpp"

using namespace cardaudit;

namespace {

constexpr Label A = Label::Absent, M = Label::Mentioned, D = Label::Detailed;

AgentVerdict verdict(Label l, bool abstained = false) {
    AgentVerdict v;
    v.agent_id = "a";
    v.label = l;
    v.abstained = abstained;
    return v;
}

EvidenceBundle bundle_with(const std::string& subsection_id, std::vector<std::string> snippets) {
    EvidenceBundle b;
    b.subsection_id = subsection_id;
    b.query.subsection_id = subsection_id;
    b.query.model = testsupport::model("m");
    int rank = 0;
    for (auto& s : snippets) b.chunks.push_back({"https://x/" + std::to_string(rank), "t", std::move(s), ++rank, {}});
    return b;
}

const Subsection& sub(const char* id) { return *builtin_framework().find_subsection(id); }

class ScriptedTransport : public ChatTransport {
public:
    explicit ScriptedTransport(std::deque<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const std::vector<ChatMessage>& messages, const LlmSettings& settings) override {
        ++calls;
        last_messages = messages;
        last_settings = settings;
        if (replies_.empty()) throw JudgingError("script exhausted");
        auto r = replies_.front();
        replies_.pop_front();
        return r;
    }
    bool concurrent_safe() const override { return false; }

    int calls = 0;
    std::vector<ChatMessage> last_messages;
    LlmSettings last_settings;

private:
    std::deque<std::string> replies_;
};

class FixedAgent : public JudgingAgent {
public:
    FixedAgent(std::string id, Label l, bool throws = false) : id_(std::move(id)), label_(l), throws_(throws) {}
    std::string id() const override { return id_; }
    AgentVerdict evaluate(const EvidenceBundle&, const Subsection&) override {
        if (throws_) throw JudgingError("transport down", true);
        return {id_, label_, "fixed", {}, false};
    }
    nlohmann::json settings() const override { return {{"kind", "fixed"}}; }

private:
    std::string id_;
    Label label_;
    bool throws_;
};

// Fails if two threads are ever inside evaluate() at once.
class ExclusiveAgent : public JudgingAgent {
public:
    std::string id() const override { return "exclusive"; }
    AgentVerdict evaluate(const EvidenceBundle&, const Subsection&) override {
        if (inside.exchange(true)) overlapped = true;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
        inside = false;
        return {"exclusive", Label::Mentioned, "", {}, false};
    }
    nlohmann::json settings() const override { return nlohmann::json::object(); }
    bool concurrent_safe() const override { return false; }
    std::atomic<bool> inside{false};
    std::atomic<bool> overlapped{false};
};

}  // namespace

TEST_CASE("consensus over all 27 ordered three-agent panels matches the truth table") {
    // index = first*9 + second*3 + third, with Absent=0, Mentioned=1, Detailed=2
    const Label truth[27] = {
        A, A, A, /**/ A, M, M, /**/ A, M, D,  // first Absent
        A, M, M, /**/ M, M, M, /**/ M, M, D,  // first Mentioned
        A, M, D, /**/ M, M, D, /**/ D, D, D,  // first Detailed
    };
    for (int i = 0; i < 27; ++i) {
        Label a = static_cast<Label>(i / 9), b = static_cast<Label>(i / 3 % 3), c = static_cast<Label>(i % 3);
        auto r = consensus({verdict(a), verdict(b), verdict(c)}, "s");
        CAPTURE(i);
        CHECK(r.label == truth[i]);
        CHECK(r.unanimous == (a == b && b == c));
        CHECK(r.tie_broken == (a != b && b != c && a != c));
        CHECK(r.label >= std::min({a, b, c}));
        CHECK(r.label <= std::max({a, b, c}));
        std::vector<Label> perm{a, b, c};
        std::sort(perm.begin(), perm.end());
        do {
            CHECK(consensus({verdict(perm[0]), verdict(perm[1]), verdict(perm[2])}).label == r.label);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
}

TEST_CASE("consensus with abstentions and small panels") {
    CHECK(consensus({verdict(D), verdict(M), verdict(A, true)}).label == M);
    CHECK(consensus({verdict(D), verdict(M), verdict(A, true)}).tie_broken);
    CHECK(consensus({verdict(A), verdict(D)}).label == A);
    CHECK(consensus({verdict(D), verdict(D), verdict(A, true)}).unanimous);
    CHECK_THROWS_AS(consensus({verdict(D), verdict(A, true), verdict(A, true)}), JudgingError);
    CHECK_THROWS_AS(consensus({}), JudgingError);
    auto five = consensus({verdict(D), verdict(D), verdict(M), verdict(A), verdict(A)});
    CHECK(five.label == M);
    CHECK(five.tie_broken);
    CHECK(consensus({verdict(D), verdict(D), verdict(D), verdict(A), verdict(A)}).label == D);
}

TEST_CASE("heuristic agent rules applied by hand") {
    const auto& s = sub("model_data.training_dataset");
    HeuristicAgent standard;
    const std::string pad(400, 'x');

    CHECK(standard.evaluate(bundle_with(s.id, {}), s).label == A);
    CHECK(standard.evaluate(bundle_with(s.id, {"nothing relevant 123 " + pad}), s).label == A);
    CHECK(standard.evaluate(bundle_with(s.id, {"The training dataset is described."}), s).label == M);

    std::string detailed = "The training dataset has 2T tokens. " + pad;
    auto v = standard.evaluate(bundle_with(s.id, {"unrelated", detailed}), s);
    CHECK(v.label == D);
    CHECK(v.cited_chunk_ranks == std::vector<int>{2});
    CHECK_FALSE(v.rationale.empty());

    std::string no_metric = "The training dataset is large. " + pad;
    CHECK(standard.evaluate(bundle_with(s.id, {no_metric}), s).label == M);

    // 399 relevant chars with a metric is not enough; two chunks adding up to 400 are
    std::string short_one = "training dataset 5 ";
    short_one += std::string(399 - short_one.size(), 'y');
    CHECK(standard.evaluate(bundle_with(s.id, {short_one}), s).label == M);
    CHECK(standard.evaluate(bundle_with(s.id, {short_one, "training dataset"}), s).label == D);

    HeuristicAgent lenient(HeuristicAgent::Variant::Lenient), strict(HeuristicAgent::Variant::Strict);
    std::string mid = "training dataset 5 " + std::string(200, 'z');
    CHECK(lenient.evaluate(bundle_with(s.id, {mid}), s).label == D);
    CHECK(standard.evaluate(bundle_with(s.id, {mid}), s).label == M);
    std::string big_one_metric = "training dataset 5 " + std::string(800, 'z');
    std::string big_two_metrics = "training dataset 5 and MMLU " + std::string(800, 'z');
    CHECK(strict.evaluate(bundle_with(s.id, {big_one_metric}), s).label == M);
    CHECK(strict.evaluate(bundle_with(s.id, {big_two_metrics}), s).label == D);
}

TEST_CASE("keyword matching is whole-word with plurals") {
    const auto& s = sub("safety_evaluation.hallucinations");
    HeuristicAgent h;
    CHECK(h.evaluate(bundle_with(s.id, {"Hallucination rates"}), s).label == M);
    CHECK(h.evaluate(bundle_with(s.id, {"nonhallucinationish"}), s).label == A);
}

TEST_CASE("metric tokens") {
    CHECK(is_metric_token("94%"));
    CHECK(is_metric_token("2024"));
    CHECK(is_metric_token("MMLU,"));
    CHECK(is_metric_token("BBQ"));
    CHECK_FALSE(is_metric_token("model"));
    CHECK_FALSE(is_metric_token(""));
}

TEST_CASE("agent reply parsing is strict") {
    auto b = bundle_with("s", {"one", "two"});
    std::string err;
    auto ok = parse_agent_reply(R"({"label":"Detailed","rationale":"Has numbers.","citations":[1,2]})", b, err);
    REQUIRE(ok);
    CHECK(ok->label == D);
    CHECK(ok->citations == std::vector<int>{1, 2});
    CHECK(parse_agent_reply("```json\n{\"label\":\"Absent\",\"rationale\":\"\",\"citations\":[]}\n```", b, err));

    for (const char* bad : {
             "Detailed",
             R"({"label":"detailed","rationale":"x","citations":[]})",
             R"({"label":"Detailed","rationale":"x","citations":[3]})",
             R"({"label":"Detailed","rationale":"x","citations":["1"]})",
             R"({"label":"Detailed","rationale":"x"})",
             R"({"label":"Detailed","rationale":"x","citations":[],"extra":1})",
             R"({"label":"Mentioned","rationale":"  ","citations":[]})",
             R"([{"label":"Detailed","rationale":"x","citations":[]}])",
             "```python\n{}\n```",
             "Sure! {\"label\":\"Detailed\",\"rationale\":\"x\",\"citations\":[]}",
         }) {
        CAPTURE(bad);
        err.clear();
        CHECK_FALSE(parse_agent_reply(bad, b, err));
        CHECK_FALSE(err.empty());
    }
}

TEST_CASE("LLM agent re-asks at most twice, then abstains") {
    const auto& s = sub("safety_evaluation.jailbreak");
    auto b = bundle_with(s.id, {"jailbreak results"});
    const std::string good = R"({"label":"Mentioned","rationale":"Brief.","citations":[1]})";

    auto t1 = std::make_shared<ScriptedTransport>(std::deque<std::string>{"nope", good});
    LlmAgent a1(t1, {"gpt-x", 0.2});
    auto v1 = a1.evaluate(b, s);
    CHECK(v1.label == M);
    CHECK_FALSE(v1.abstained);
    CHECK(t1->calls == 2);
    CHECK(t1->last_messages.size() == 4);
    CHECK(t1->last_messages[3].content.find("invalid") != std::string::npos);
    CHECK(t1->last_settings.temperature == 0.2);

    auto t2 = std::make_shared<ScriptedTransport>(std::deque<std::string>{"a", "b", "c", good});
    LlmAgent a2(t2, {"gpt-x", 0.0});
    auto v2 = a2.evaluate(b, s);
    CHECK(v2.abstained);
    CHECK(t2->calls == 1 + LlmAgent::kMaxReasks);
    CHECK(a2.settings()["model"] == "gpt-x");
}

TEST_CASE("judge prompt carries criteria and numbered evidence") {
    const auto& s = sub("safety_evaluation.jailbreak");
    auto msgs = render_judge_prompt(bundle_with(s.id, {"first", "second"}), s);
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].role == "system");
    CHECK(msgs[1].content.find(s.criteria_prompt) != std::string::npos);
    CHECK(msgs[1].content.find("[2]") != std::string::npos);
    CHECK(render_judge_prompt(bundle_with(s.id, {}), s)[1].content.find("no evidence") != std::string::npos);
}

TEST_CASE("evaluate_subsection rejects a mismatched bundle") {
    HeuristicAgent h;
    CHECK_THROWS_AS(evaluate_subsection(bundle_with("x.y", {}), sub("safety_evaluation.jailbreak"), h), ContractError);
}

TEST_CASE("judge_model handles failed bundles, agent errors and serialization") {
    const auto& f = builtin_framework();
    std::map<std::string, EvidenceBundle> bundles;
    for (const auto* s : f.subsections()) bundles[s->id] = bundle_with(s->id, {});
    bundles["safety_evaluation.jailbreak"].failed = true;
    bundles["safety_evaluation.jailbreak"].error = "timeout";
    bundles.erase("risk_mitigations.risk_mitigation");

    FixedAgent d1("d1", D), d2("d2", D), broken("x", A, true);
    auto out = judge_model(bundles, f, {&d1, &d2, &broken}, {4});
    REQUIRE(out.size() == f.subsection_count());
    CHECK(out.at("safety_evaluation.jailbreak").unscorable);
    CHECK(out.at("safety_evaluation.jailbreak").note.find("timeout") != std::string::npos);
    CHECK(out.at("risk_mitigations.risk_mitigation").unscorable);
    const auto& ok = out.at("model_data.training_dataset");
    CHECK(ok.label == D);
    CHECK(ok.unanimous);
    REQUIRE(ok.verdicts.size() == 3);
    CHECK(ok.verdicts[2].abstained);

    FixedAgent e1("e1", D, true), e2("e2", D, true);
    auto none = judge_model(bundles, f, {&d1, &e1, &e2}, {2});
    CHECK(none.at("model_data.training_dataset").unscorable);

    ExclusiveAgent ex;
    FixedAgent m1("m1", M), m2("m2", M);
    auto serial = judge_model(bundles, f, {&ex, &m1, &m2}, {4});
    CHECK_FALSE(ex.overlapped);
    CHECK(serial.at("model_data.training_dataset").label == M);
    CHECK_THROWS_AS(judge_model(bundles, f, {}, {}), ContractError);
}

TEST_CASE("agent panel specs") {
    auto p = make_agent_panel("heuristic,heuristic:lenient, heuristic:strict");
    REQUIRE(p.size() == 3);
    CHECK(p[0]->id() == "heuristic#1");
    CHECK(p[2]->id() == "heuristic:strict#3");
    CHECK(p[1]->settings()["min_chars"] == 200);
    CHECK_THROWS_AS(make_agent_panel("heuristic"), ConfigError);
    CHECK(make_agent_panel("heuristic", true).size() == 1);
    CHECK_THROWS_AS(make_agent_panel("heuristic,,heuristic"), ConfigError);
    CHECK_THROWS_AS(make_agent_panel("heuristic:fuzzy,heuristic,heuristic"), ConfigError);
    CHECK_THROWS_AS(make_agent_panel("oracle,heuristic,heuristic"), ConfigError);
    CHECK_THROWS_AS(make_agent_panel("llm:,heuristic,heuristic"), ConfigError);
    CHECK_THROWS_AS(make_agent_panel("llm:gpt:hot,heuristic,heuristic"), ConfigError);

    auto t = std::make_shared<ScriptedTransport>(std::deque<std::string>{});
    auto mixed = make_agent_panel("llm:gpt-4o:0.3,llm:claude,heuristic", false, t);
    CHECK(mixed[0]->settings()["temperature"] == 0.3);
    CHECK(mixed[1]->settings()["model"] == "claude");
    CHECK_FALSE(mixed[0]->concurrent_safe());
}

TEST_CASE("verdict JSON round-trip") {
    AgentVerdict v{"h#1", D, "why \"quoted\"", {1, 3}, false};
    CHECK(verdict_from_json(to_json(v)) == v);
    v.abstained = true;
    CHECK(verdict_from_json(to_json(v)) == v);
}

TEST_CASE("HTTP chat transport against a local server") {
    httplib::Server server;
    std::string seen_auth, seen_body;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = req.body;
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})", "application/json");
    });
    server.Post("/deny/chat/completions", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    HttpChatTransport ok(base + "/v1/", "k");
    CHECK(ok.complete({{"user", "hi"}}, {"m", 0.5}) == "hello");
    CHECK(seen_auth == "Bearer k");
    auto body = nlohmann::json::parse(seen_body);
    CHECK(body["model"] == "m");
    CHECK(body["messages"][0]["content"] == "hi");

    HttpChatTransport deny(base + "/deny", "k");
    CHECK_THROWS_AS(deny.complete({{"user", "hi"}}, {"m", 0}), JudgingError);
    HttpChatTransport nokey(base + "/v1", "");
    CHECK_THROWS_AS(nokey.complete({{"user", "hi"}}, {"m", 0}), JudgingError);

    server.stop();
    th.join();
}
