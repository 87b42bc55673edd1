#include "cardaudit/cli.hpp"

#include <CLI11.hpp>
#include <mutex>
#include <optional>

#include "cardaudit/errors.hpp"
#include "cardaudit/pipeline.hpp"

namespace cardaudit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
    RunConfig config;
    long long timeout_ms = 15000;
    bool no_cache = false;
    std::string provider_mode = "mean";
};

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--framework", f.config.framework, "Framework file or 'builtin'")->capture_default_str();
    cmd->add_option("--backend", f.config.backend, "Evidence backend: live | corpus:<dir>")->required();
    cmd->add_option("--agents", f.config.agents, "Comma-separated agent specs (heuristic[:variant], llm:<model>[:temp])")
        ->capture_default_str();
    cmd->add_flag("--allow-small-panel", f.config.allow_small_panel, "Permit fewer than three agents");
    cmd->add_option("--parallelism", f.config.parallelism, "Concurrent workers")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--out", f.config.out_root, "Output root")->capture_default_str();
    cmd->add_option("--max-chunks", f.config.limits.max_chunks, "Evidence chunks per subsection")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--timeout-ms", f.timeout_ms, "Per-request timeout")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_flag("--no-cache", f.no_cache, "Bypass the evidence cache");
    cmd->add_option("--provider-aggregation", f.provider_mode, "Provider compliance: mean | best")
        ->check(CLI::IsMember({"mean", "best"}))
        ->capture_default_str();
}

RunConfig finish(const CommonFlags& f) {
    RunConfig c = f.config;
    c.limits.timeout = std::chrono::milliseconds(f.timeout_ms);
    c.use_cache = !f.no_cache;
    c.provider_mode = f.provider_mode == "best" ? ProviderAggregation::Best : ProviderAggregation::Mean;
    return c;
}

int cmd_schema_export(const std::string& out_path, std::ostream& out) {
    auto text = serialize_framework(builtin_framework());
    if (out_path.empty() || out_path == "-") {
        out << text;
    } else {
        write_file_atomic(out_path, text);
        out << "wrote " << out_path << "\n";
    }
    return kExitOk;
}

int cmd_schema_validate(const std::string& path, std::ostream& out, std::ostream& err) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        err << "error: " << path << ": " << e.what() << "\n";
        return kExitUsage;
    }
    Framework f;
    try {
        f = framework_from_json(j);
    } catch (const ParseError& e) {
        err << "error: " << path << ": " << e.what() << "\n";
        return kExitUsage;
    }
    auto violations = validate_framework(f);
    for (const auto& v : violations) out << v.path << ": " << v.message << "\n";
    if (!violations.empty()) return kExitDomain;
    out << path << ": valid (" << f.sections.size() << " sections, " << f.subsection_count() << " subsections)\n";
    return kExitOk;
}

int cmd_analyze_corpus(const fs::path& dir, double threshold, const fs::path& out_dir, const std::string& lexicon_path,
                       std::ostream& out, std::ostream& err) {
    std::vector<fs::path> files;
    try {
        files = list_card_files(dir);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    std::vector<ModelCardDocument> cards;
    for (const auto& p : files) {
        try {
            cards.push_back(load_card_file(p));
            cards.back().source_id = fs::relative(p, dir).generic_string();
        } catch (const std::exception& e) {
            err << "warning: skipping " << p.string() << ": " << e.what() << "\n";
        }
    }
    if (cards.empty()) {
        err << "error: no parseable cards under " << dir.string() << "\n";
        return kExitUsage;
    }
    ConceptLexicon lexicon = lexicon_path.empty() ? card_heading_lexicon() : ConceptLexicon::from_json(read_file(lexicon_path));

    auto a = analyze_corpus(cards, threshold, lexicon);
    write_file_atomic(out_dir / "clusters.csv", clusters_csv(a));
    write_file_atomic(out_dir / "concepts.csv", concepts_csv(a));
    write_file_atomic(out_dir / "presence.csv", presence_csv(a.presence, card_category_ids()));

    std::string depth = "card,category,label\n";
    for (const auto& [key, label] : a.depth)
        depth += csv_escape(key.first) + "," + key.second + "," + std::string(to_string(label)) + "\n";
    write_file_atomic(out_dir / "depth.csv", depth);

    out << a.cards << " cards, " << a.headings << " headings, " << a.unique_names.size() << " unique section names, "
        << a.clusters.size() << " clusters at threshold " << threshold << "\n";
    for (const auto& [concept_id, names] : a.concept_variants)
        out << "  " << concept_id << ": " << names.size() << " variants\n";
    out << "  unmatched: " << a.unmatched.size() << "\n";
    out << "wrote clusters.csv, concepts.csv, presence.csv, depth.csv to " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_score(const RunConfig& config, const ModelIdentity& model, std::ostream& out) {
    Pipeline pipeline(config);
    RetrievalStats stats;
    auto report = pipeline.score(model, &stats);
    ReportStore store(config.out_root);
    auto& manifest = pipeline.manifest();
    manifest.cache_stats = stats;
    manifest.models = {model.model_id};
    store.save_manifest(manifest);
    auto path = store.save_report(report);
    out << render_summary(report);
    out << "report: " << path.string() << "\n";
    return kExitOk;
}

int cmd_batch(const RunConfig& config, const fs::path& models_file, std::ostream& out, std::ostream& err) {
    auto models = load_model_list(models_file);
    Pipeline pipeline(config);
    ReportStore store(config.out_root);

    // Models run side by side; each model's subsections then run serially to stay within the bound.
    const bool outer = pipeline.panel_concurrent_safe() && models.size() > 1 && config.parallelism > 1;
    const std::size_t outer_n = outer ? config.parallelism : 1;
    const std::size_t inner_n = outer ? 1 : config.parallelism;

    std::vector<std::optional<TransparencyReport>> reports(models.size());
    std::vector<std::string> errors(models.size());
    std::mutex stats_mutex;
    RetrievalStats total;
    parallel_for(models.size(), outer_n, [&](std::size_t i) {
        try {
            RetrievalStats s;
            auto r = pipeline.score(models[i], &s, inner_n);
            store.save_report(r);
            reports[i] = std::move(r);
            std::lock_guard lock(stats_mutex);
            total.cache_hits += s.cache_hits;
            total.cache_misses += s.cache_misses;
            total.failures += s.failures;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    auto& manifest = pipeline.manifest();
    manifest.cache_stats = total;
    std::vector<TransparencyReport> ok;
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (reports[i]) {
            manifest.models.push_back(models[i].model_id);
            ok.push_back(*reports[i]);
            out << models[i].model_id << ": " << reports[i]->total.to_string_1dp() << "\n";
        } else {
            manifest.failures[models[i].model_id] = errors[i];
            err << "error: " << models[i].model_id << ": " << errors[i] << "\n";
        }
    }
    store.save_manifest(manifest);
    if (ok.empty()) {
        err << "error: every model failed\n";
        return kExitDomain;
    }

    auto fleet = fleet_analytics(ok, config.provider_mode);
    std::vector<std::string> order;
    for (const auto* s : pipeline.framework().subsections()) order.push_back(s->id);
    const fs::path dir = config.out_root / "analytics";
    write_file_atomic(dir / "presence.csv", presence_csv(fleet.presence, order));
    write_file_atomic(dir / "point_loss.csv", point_loss_csv(fleet.point_loss, pipeline.framework()));
    write_file_atomic(dir / "provider_compliance.csv", provider_compliance_csv(fleet.provider_compliance, ok));
    out << ok.size() << "/" << models.size() << " models scored; analytics in " << dir.string() << "\n";
    return kExitOk;
}

int cmd_diff(const fs::path& root, const std::string& model_id, const std::string& older, const std::string& newer,
             bool as_json, std::ostream& out) {
    ReportStore store(root);
    auto a = store.load_report(store.resolve(model_id, older));
    auto b = store.load_report(store.resolve(model_id, newer));
    auto d = diff_reports(a, b);
    if (as_json) out << to_json(d).dump(2) << "\n";
    else out << render_diff(d);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Audit AI model documentation against a weighted transparency rubric", "cardaudit"};
    app.require_subcommand(1);

    auto* schema = app.add_subcommand("schema", "Export or validate a framework file");
    schema->require_subcommand(1);
    std::string export_out;
    auto* schema_export = schema->add_subcommand("export", "Write the builtin framework as JSON");
    schema_export->add_option("--out", export_out, "Destination file (stdout when omitted)");
    std::string validate_path;
    auto* schema_validate = schema->add_subcommand("validate", "Check a framework file");
    schema_validate->add_option("file", validate_path, "Framework JSON")->required();

    auto* analyze = app.add_subcommand("analyze-corpus", "Section-name variation and category presence over model cards");
    std::string corpus_dir, lexicon_path;
    double threshold = kDefaultMatchThreshold;
    fs::path analyze_out = "out/corpus";
    analyze->add_option("dir", corpus_dir, "Directory of .md cards")->required();
    analyze->add_option("--threshold", threshold, "Similarity threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    analyze->add_option("--out", analyze_out, "Output directory")->capture_default_str();
    analyze->add_option("--lexicon", lexicon_path, "Concept lexicon JSON");

    auto* score = app.add_subcommand("score", "Score one model");
    CommonFlags score_flags;
    ModelIdentity model;
    std::string version_label;
    add_run_flags(score, score_flags);
    score->add_option("--model", model.model_id, "Model id")->required();
    score->add_option("--display-name", model.display_name, "Name used in queries (defaults to the id)");
    score->add_option("--provider", model.provider, "Provider");
    score->add_option("--version-label", version_label, "Version label");

    auto* batch = app.add_subcommand("batch", "Score every model in a JSON list and write fleet analytics");
    CommonFlags batch_flags;
    std::string models_file;
    add_run_flags(batch, batch_flags);
    batch->add_option("models", models_file, "JSON array of models")->required();

    auto* diff = app.add_subcommand("diff", "Compare two stored reports of one model");
    std::string diff_model, diff_older, diff_newer;
    fs::path diff_root = "out";
    bool diff_json = false;
    diff->add_option("model", diff_model, "Model id")->required();
    diff->add_option("older", diff_older, "Older report: path, file name, 'previous'")->required();
    diff->add_option("newer", diff_newer, "Newer report: path, file name, 'latest'")->required();
    diff->add_option("--out", diff_root, "Store root")->capture_default_str();
    diff->add_flag("--json", diff_json, "Emit JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*schema_export) return cmd_schema_export(export_out, out);
        if (*schema_validate) return cmd_schema_validate(validate_path, out, err);
        if (*analyze) return cmd_analyze_corpus(corpus_dir, threshold, analyze_out, lexicon_path, out, err);
        if (*score) {
            if (model.display_name.empty()) model.display_name = model.model_id;
            if (!version_label.empty()) model.version_label = version_label;
            return cmd_score(finish(score_flags), model, out);
        }
        if (*batch) return cmd_batch(finish(batch_flags), models_file, out, err);
        if (*diff) return cmd_diff(diff_root, diff_model, diff_older, diff_newer, diff_json, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const StorageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "invalid framework: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}

}  // namespace cardaudit
