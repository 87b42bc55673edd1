#include <doctest.h>

#include <algorithm>

#include "cardaudit/errors.hpp"
#include "cardaudit/score.hpp"
#include "support.hpp"

using namespace cardaudit;
using namespace testsupport;

namespace {

const Framework& fw() { return builtin_framework(); }

long long oracle_total_units(const std::map<std::string, Label>& labels) {
    long long sum = 0;
    for (const auto& [id, tenths] : rubric_tenths()) sum += tenths * default_credit_permille(labels.at(id));
    return sum;
}

}  // namespace

TEST_CASE("oracle weight table covers the builtin framework") {
    REQUIRE(rubric_tenths().size() == fw().subsection_count());
    for (const auto* s : fw().subsections()) CHECK(rubric_tenths().at(s->id) == s->weight.tenths());
}

TEST_CASE("worked totals") {
    CHECK(aggregate(label_all(fw(), [](auto&) { return Label::Detailed; }), fw(), model("m")).total.to_string() ==
          "100.0");
    CHECK(aggregate(label_all(fw(), [](auto&) { return Label::Absent; }), fw(), model("m")).total.to_string() == "0.0");
    auto r = aggregate(label_all(fw(),
                                 [](const std::string& id) {
                                     return id.rfind("safety_evaluation.", 0) == 0 ? Label::Mentioned : Label::Detailed;
                                 }),
                       fw(), model("m"));
    CHECK(r.total.to_string() == "87.5");
    CHECK(r.total == Points::parse("87.5"));
    CHECK(r.section_totals[6].points.to_string() == "12.5");
    auto half = aggregate(label_all(fw(), [](auto&) { return Label::Mentioned; }), fw(), model("m"));
    CHECK(half.total.to_string() == "50.0");
    CHECK(half.find("model_details.release_date")->points_earned.to_string() == "0.25");
}

TEST_CASE("aggregate equals a brute-force sum over random labelings") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        std::map<std::string, Label> labels;
        for (const auto& [id, t] : rubric_tenths()) labels[id] = random_label(rng);
        auto r = aggregate(label_all(fw(), [&](const std::string& id) { return labels.at(id); }), fw(), model("m"));
        REQUIRE(r.total.units() == oracle_total_units(labels));
        Points sections;
        for (const auto& st : r.section_totals) sections += st.points;
        REQUIRE(sections == r.total);
        for (const auto& s : r.subsection_scores) REQUIRE(s.points_earned + s.points_lost == Points::of(s.weight));
    }
}

TEST_CASE("unscorable subsections earn nothing and are flagged") {
    auto labels = label_all(fw(), [](auto&) { return Label::Detailed; });
    labels["safety_evaluation.jailbreak"].unscorable = true;
    labels["safety_evaluation.jailbreak"].label = Label::Detailed;
    labels["safety_evaluation.jailbreak"].note = "retrieval failed";
    labels["critical_risk.cbrn"].tie_broken = true;
    auto r = aggregate(labels, fw(), model("m"));
    CHECK(r.total.to_string() == "96.0");
    CHECK(r.unscorable_count() == 1);
    CHECK(r.tie_broken_count() == 1);
    CHECK(r.find("safety_evaluation.jailbreak")->label == Label::Absent);
    CHECK(r.find("safety_evaluation.jailbreak")->note == "retrieval failed");
}

TEST_CASE("aggregate rejects a missing subsection") {
    auto labels = label_all(fw(), [](auto&) { return Label::Detailed; });
    labels.erase("model_details.release_date");
    CHECK_THROWS_AS(aggregate(labels, fw(), model("m")), ContractError);
}

TEST_CASE("custom credit policy flows through") {
    Framework f = fw();
    f.credits.mentioned = Credit::parse("0.25");
    auto r = aggregate(label_all(f, [](auto&) { return Label::Mentioned; }), f, model("m"));
    CHECK(r.total.to_string() == "25.0");
    CHECK(r.find("model_details.release_date")->points_earned.to_string() == "0.125");
}

TEST_CASE("evidence references are attached") {
    std::map<std::string, EvidenceBundle> ev;
    ev["model_data.training_dataset"].chunks.push_back({"https://x", "X", "s", 1, {}});
    auto r = aggregate(label_all(fw(), [](auto&) { return Label::Absent; }), fw(), model("m"), &ev);
    REQUIRE(r.find("model_data.training_dataset")->evidence.size() == 1);
    CHECK(r.find("model_data.training_dataset")->evidence[0].source_url == "https://x");
}

TEST_CASE("fleet analytics equal recomputation from raw labels") {
    auto fleet = synthetic_fleet(99);
    auto reports = fleet_reports(fleet);

    auto loss = point_loss_by_subsection(reports);
    for (const auto& [id, tenths] : rubric_tenths()) {
        long long expect = 0;
        for (const auto& m : fleet) expect += tenths * (1000 - default_credit_permille(m.labels.at(id)));
        CHECK(loss.at(id).units() == expect);
    }

    std::map<std::string, std::vector<long long>> by_provider;
    for (const auto& m : fleet) by_provider[m.model.provider].push_back(oracle_total_units(m.labels));
    auto mean = provider_compliance(reports);
    auto best = provider_compliance(reports, ProviderAggregation::Best);
    REQUIRE(mean.size() == by_provider.size());
    for (const auto& [p, totals] : by_provider) {
        long long sum = 0;
        for (auto t : totals) sum += t;
        // round(sum / n) to 0.1 pt (1000 units), half up; totals are non-negative
        long long n = static_cast<long long>(totals.size());
        long long expect = (sum * 2 + n * 1000) / (n * 2000) * 1000;
        CHECK(mean.at(p).units() == expect);
        long long mx = *std::max_element(totals.begin(), totals.end());
        CHECK(best.at(p).units() == (mx + 500) / 1000 * 1000);
    }

    JudgmentMatrix matrix;
    for (const auto& m : fleet)
        for (const auto& [id, l] : m.labels) matrix[{m.model.model_id, id}] = l;
    auto presence = presence_stats(matrix);
    for (const auto& [id, t] : rubric_tenths()) {
        std::size_t d = 0, me = 0, a = 0;
        for (const auto& m : fleet) {
            auto l = m.labels.at(id);
            d += l == Label::Detailed;
            me += l == Label::Mentioned;
            a += l == Label::Absent;
        }
        const auto& p = presence.at(id);
        CHECK(p.models == fleet.size());
        CHECK(p.detailed == d);
        CHECK(p.mentioned == me);
        CHECK(p.absent == a);
    }
    auto fa = fleet_analytics(reports);
    CHECK(fa.presence == presence);
    CHECK(fa.point_loss == loss);
    CHECK(fa.provider_compliance == mean);
}

TEST_CASE("single-model fleet degenerates to the report") {
    auto reports = fleet_reports(synthetic_fleet(3, 1));
    auto fa = fleet_analytics(reports);
    for (const auto& s : reports[0].subsection_scores) CHECK(fa.point_loss.at(s.subsection_id) == s.points_lost);
    CHECK(fa.provider_compliance.at(reports[0].model.provider) == reports[0].total.rounded_1dp());
}

TEST_CASE("mixed framework versions are rejected") {
    auto reports = fleet_reports(synthetic_fleet(5, 2));
    reports[1].framework_version = "2.0.0";
    CHECK_THROWS_AS(point_loss_by_subsection(reports), ContractError);
    CHECK(point_loss_by_subsection({}).empty());
}

TEST_CASE("presence treats missing judgments as absent") {
    JudgmentMatrix m{{{"a", "x"}, Label::Detailed}, {{"b", "y"}, Label::Mentioned}};
    auto p = presence_stats(m);
    CHECK(p.at("x").models == 2);
    CHECK(p.at("x").absent == 1);
    CHECK(p.at("x").presence_rate() == 0.5);
}

TEST_CASE("CSV output") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    auto reports = fleet_reports(synthetic_fleet(1, 4));
    auto fa = fleet_analytics(reports);
    auto loss = point_loss_csv(fa.point_loss, fw());
    CHECK(loss.rfind("subsection_id,section_id,title,weight,points_lost\n", 0) == 0);
    CHECK(loss.find("\"CBRN (Chemical, Biological, Radiological or Nuclear)\"") != std::string::npos);
    auto comp = provider_compliance_csv(fa.provider_compliance, reports);
    CHECK(comp.rfind("provider,models,score\n", 0) == 0);
    CHECK(std::count(comp.begin(), comp.end(), '\n') == 5);
    auto pres = presence_csv({{"b", {3, 1, 1, 1}}, {"a", {3, 0, 0, 3}}}, {"b"});
    CHECK(pres == "concept,models,present,presence_rate,detailed,mentioned,absent\n"
                  "b,3,2,0.6667,1,1,1\n"
                  "a,3,0,0.0000,0,0,3\n");
}

TEST_CASE("report JSON round-trip and summary") {
    auto r = fleet_reports(synthetic_fleet(11, 1))[0];
    r.model.version_label = "v2";
    r.run_manifest_ref = "run-1";
    r.subsection_scores[0].verdicts.push_back({"h#1", Label::Detailed, "ok", {1}, false});
    r.subsection_scores[0].evidence.push_back({1, "https://x", "X", parse_rfc3339("2025-01-01T00:00:00Z")});
    r.created_at = parse_rfc3339("2025-06-01T12:00:00Z");
    auto j = to_json(r);
    CHECK(j["total"] == r.total.to_string());
    CHECK(report_from_json(j) == r);
    CHECK(report_from_json(nlohmann::json::parse(j.dump())) == r);
    CHECK_THROWS_AS(report_from_json(nlohmann::json::object()), ParseError);

    auto s = render_summary(r);
    CHECK(s.find(r.total.to_string_1dp()) != std::string::npos);
    CHECK(s.find("Safety Evaluation") != std::string::npos);
    CHECK(s.find("unscorable") != std::string::npos);
}
