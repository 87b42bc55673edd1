#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cardaudit/cli.hpp"
#include "cardaudit/errors.hpp"
#include "cardaudit/http.hpp"
#include "support.hpp"

using namespace cardaudit;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

struct Result {
    int rc;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "cardaudit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {rc, out.str(), err.str()};
}

std::string corpus_backend() { return "corpus:" + (fixtures() / "corpus").string(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

fs::path report_path(const Result& r) {
    auto pos = r.out.find("report: ");
    REQUIRE(pos != std::string::npos);
    auto line = r.out.substr(pos + 8);
    return line.substr(0, line.find('\n'));
}

nlohmann::json stable_report(const fs::path& p) {
    auto j = nlohmann::json::parse(slurp(p));
    strip_volatile(j);
    return j;
}

}  // namespace

TEST_CASE("usage errors exit 2 and help exits 0") {
    CHECK(run({"--help"}).rc == kExitOk);
    CHECK(run({}).rc == kExitUsage);
    CHECK(run({"frobnicate"}).rc == kExitUsage);
    CHECK(run({"score", "--model", "x"}).rc == kExitUsage);
    CHECK(run({"score", "--backend", "live", "--model", "x", "--bogus"}).rc == kExitUsage);
    CHECK(run({"analyze-corpus", "d", "--threshold", "1.5"}).rc == kExitUsage);
}

TEST_CASE("schema export and validate") {
    TempDir tmp("schema");
    auto file = (tmp.path() / "fw.json").string();
    REQUIRE(run({"schema", "export", "--out", file}).rc == kExitOk);
    auto ok = run({"schema", "validate", file});
    CHECK(ok.rc == kExitOk);
    CHECK(ok.out.find("valid (8 sections, 36 subsections)") != std::string::npos);

    auto stdout_export = run({"schema", "export"});
    CHECK(stdout_export.rc == kExitOk);
    CHECK(stdout_export.out == slurp(file));

    auto j = nlohmann::json::parse(slurp(file));
    j["sections"][0]["weight"] = "13.0";
    auto bad = (tmp.path() / "bad.json").string();
    write(bad, j.dump());
    auto r = run({"schema", "validate", bad});
    CHECK(r.rc == kExitDomain);
    CHECK_FALSE(r.out.empty());

    write(tmp.path() / "garbage.json", "{oops");
    CHECK(run({"schema", "validate", (tmp.path() / "garbage.json").string()}).rc == kExitUsage);
    CHECK(run({"schema", "validate", (tmp.path() / "missing.json").string()}).rc == kExitUsage);
}

TEST_CASE("score on the bundled corpus is deterministic and offline") {
    TempDir tmp("score");
    const auto calls = http::call_count();
    std::vector<nlohmann::json> runs;
    for (int i = 0; i < 3; ++i) {
        auto r = run({"score", "--backend", corpus_backend(), "--model", "demo", "--provider", "demo-lab", "--out",
                      tmp.path().string()});
        REQUIRE(r.rc == kExitOk);
        CHECK(r.out.find("demo") != std::string::npos);
        runs.push_back(stable_report(report_path(r)));
    }
    CHECK(runs[0] == runs[1]);
    CHECK(runs[1] == runs[2]);
    CHECK(http::call_count() == calls);
    auto total = Points::parse(runs[0]["total"].get<std::string>());
    CHECK(total > Points{});
    CHECK(total < Points::parse("100"));

    auto uncached = run({"score", "--backend", corpus_backend(), "--model", "demo", "--provider", "demo-lab", "--out",
                         tmp.path().string(), "--no-cache", "--parallelism", "1"});
    REQUIRE(uncached.rc == kExitOk);
    CHECK(stable_report(report_path(uncached)) == runs[0]);

    auto d = run({"diff", "demo", "previous", "latest", "--out", tmp.path().string()});
    CHECK(d.rc == kExitOk);
    CHECK(d.out.find("no label changes") != std::string::npos);
    auto dj = run({"diff", "demo", "previous", "latest", "--out", tmp.path().string(), "--json"});
    CHECK(nlohmann::json::parse(dj.out)["total_delta"] == "0.0");
    CHECK(run({"diff", "demo", "nope", "latest", "--out", tmp.path().string()}).rc == kExitUsage);
    CHECK(run({"diff", "ghost", "previous", "latest", "--out", tmp.path().string()}).rc == kExitUsage);

    CHECK(fs::exists(tmp.path() / "cache" / "demo"));
    CHECK_FALSE(fs::is_empty(tmp.path() / "runs"));
}

TEST_CASE("a model with no documents scores zero") {
    TempDir tmp("empty");
    fs::create_directories(tmp.path() / "corpus" / "ghost");
    auto r = run({"score", "--backend", "corpus:" + (tmp.path() / "corpus").string(), "--model", "ghost", "--out",
                  (tmp.path() / "out").string()});
    REQUIRE(r.rc == kExitOk);
    CHECK(nlohmann::json::parse(slurp(report_path(r)))["total"] == "0.0");
}

TEST_CASE("panel and backend configuration errors") {
    TempDir tmp("config");
    auto base = std::vector<std::string>{"score", "--backend", corpus_backend(), "--model", "demo", "--out",
                                         tmp.path().string()};
    auto small = base;
    small.insert(small.end(), {"--agents", "heuristic"});
    CHECK(run(small).rc == kExitUsage);
    small.push_back("--allow-small-panel");
    auto lone = run(small);
    REQUIRE(lone.rc == kExitOk);
    auto lone_report = ReportStore(tmp.path()).load_report(report_path(lone));
    CHECK(lone_report.unscorable_count() == builtin_framework().subsection_count());
    CHECK(lone_report.total == Points{});
    auto pair = base;
    pair.insert(pair.end(), {"--agents", "heuristic,heuristic:strict", "--allow-small-panel"});
    CHECK(run(pair).rc == kExitOk);
    auto bad_backend = base;
    bad_backend[2] = "carrier-pigeon";
    CHECK(run(bad_backend).rc == kExitUsage);
    auto bad_agent = base;
    bad_agent.insert(bad_agent.end(), {"--agents", "oracle,oracle,oracle"});
    CHECK(run(bad_agent).rc == kExitUsage);
}

TEST_CASE("batch writes reports, manifest and fleet analytics") {
    TempDir tmp("batch");
    fs::create_directories(tmp.path() / "corpus" / "ghost");
    fs::copy(fixtures() / "corpus" / "demo", tmp.path() / "corpus" / "demo");
    write(tmp.path() / "corpus" / "thin" / "card.md", "# Model Card\n\nThin is a small model. License: MIT.\n");
    auto models = tmp.path() / "models.json";
    write(models, R"([
        {"model_id": "demo", "display_name": "Demo", "provider": "acme"},
        {"model_id": "thin", "display_name": "Thin", "provider": "acme"},
        {"model_id": "ghost", "display_name": "Ghost", "provider": "nobody", "version_label": "v0"}
    ])");
    auto out = tmp.path() / "out";
    auto r = run({"batch", models.string(), "--backend", "corpus:" + (tmp.path() / "corpus").string(), "--out",
                  out.string()});
    REQUIRE(r.rc == kExitOk);
    CHECK(r.out.find("3/3 models scored") != std::string::npos);

    ReportStore store(out);
    std::vector<TransparencyReport> reports;
    for (const char* id : {"demo", "thin", "ghost"}) reports.push_back(store.load_report(store.resolve(id, "latest")));
    CHECK(reports[2].total == Points{});
    CHECK(reports[2].model.version_label == "v0");
    auto fa = fleet_analytics(reports);
    CHECK(slurp(out / "analytics" / "point_loss.csv") == point_loss_csv(fa.point_loss, builtin_framework()));
    CHECK(slurp(out / "analytics" / "provider_compliance.csv") == provider_compliance_csv(fa.provider_compliance, reports));
    std::vector<std::string> order;
    for (const auto* s : builtin_framework().subsections()) order.push_back(s->id);
    CHECK(slurp(out / "analytics" / "presence.csv") == presence_csv(fa.presence, order));

    // a batch run matches single-model scoring
    auto single = run({"score", "--backend", "corpus:" + (tmp.path() / "corpus").string(), "--model", "demo",
                       "--display-name", "Demo", "--provider", "acme", "--out", (tmp.path() / "single").string()});
    REQUIRE(single.rc == kExitOk);
    auto batch_json = to_json(reports[0]);
    strip_volatile(batch_json);
    CHECK(stable_report(report_path(single)) == batch_json);

    write(tmp.path() / "dup.json", R"([{"model_id": "a", "display_name": "A", "provider": "p"},
                                       {"model_id": "a", "display_name": "A", "provider": "p"}])");
    CHECK(run({"batch", (tmp.path() / "dup.json").string(), "--backend", corpus_backend(), "--out", out.string()}).rc ==
          kExitUsage);
    write(tmp.path() / "broken.json", "[{");
    CHECK(run({"batch", (tmp.path() / "broken.json").string(), "--backend", corpus_backend(), "--out", out.string()})
              .rc == kExitUsage);
    write(tmp.path() / "empty.json", "[]");
    CHECK(run({"batch", (tmp.path() / "empty.json").string(), "--backend", corpus_backend(), "--out", out.string()})
              .rc == kExitUsage);
}

TEST_CASE("analyze-corpus presence and outputs") {
    TempDir tmp("analyze");
    for (int i = 0; i < 3; ++i)
        write(tmp.path() / "cards" / ("c" + std::to_string(i) + ".md"),
              "---\nlicense: mit\n---\n# " + std::string(i == 1 ? "Licence" : "License") +
                  "\n\nThis model is released under the MIT license. The license permits commercial use, "
                  "modification and redistribution provided the copyright notice and license text are retained.\n");
    auto out = tmp.path() / "out";
    auto r = run({"analyze-corpus", (tmp.path() / "cards").string(), "--out", out.string()});
    REQUIRE(r.rc == kExitOk);
    CHECK(r.out.find("3 cards, 3 headings, 2 unique section names") != std::string::npos);
    auto presence = slurp(out / "presence.csv");
    CHECK(presence.find("\nlicense,3,3,1.0000,") != std::string::npos);
    CHECK(presence.find("\ntraining_data,3,0,0.0000,0,0,3\n") != std::string::npos);
    auto concepts = slurp(out / "concepts.csv");
    CHECK(concepts.find("license,2,") != std::string::npos);
    CHECK(slurp(out / "clusters.csv").rfind("cluster_id,representative,member,count\n", 0) == 0);
    auto depth = slurp(out / "depth.csv");
    CHECK(depth.find("c1.md,license,") != std::string::npos);

    SUBCASE("headings with empty bodies are found but not credited") {
        write(tmp.path() / "bare" / "a.md", "# License\n\n# Training Data\n");
        auto b = run({"analyze-corpus", (tmp.path() / "bare").string(), "--out", (tmp.path() / "bare_out").string()});
        REQUIRE(b.rc == kExitOk);
        auto p = slurp(tmp.path() / "bare_out" / "presence.csv");
        CHECK(p.find("\nlicense,1,") != std::string::npos);
        CHECK(p.find("\ntraining_data,1,") != std::string::npos);
    }
    SUBCASE("missing or empty directories are usage errors") {
        CHECK(run({"analyze-corpus", (tmp.path() / "nowhere").string()}).rc == kExitUsage);
        fs::create_directories(tmp.path() / "void");
        CHECK(run({"analyze-corpus", (tmp.path() / "void").string()}).rc == kExitUsage);
    }
}
