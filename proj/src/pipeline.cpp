#include "cardaudit/pipeline.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cardaudit/errors.hpp"

namespace cardaudit {

using nlohmann::json;

Framework resolve_framework(const std::string& spec) {
    if (spec.empty() || spec == "builtin") return builtin_framework();
    return load_framework(read_file(spec));
}

Pipeline::Pipeline(const RunConfig& config, std::shared_ptr<ChatTransport> transport)
    : config_(config), framework_(resolve_framework(config.framework)) {
    if (config_.backend.empty()) throw ConfigError("no evidence backend selected (live or corpus:<dir>)");
    backend_ = make_backend(config_.backend);
    panel_ = make_agent_panel(config_.agents, config_.allow_small_panel, std::move(transport));
    if (config_.use_cache) cache_ = std::make_unique<EvidenceCache>(config_.out_root / "cache");

    manifest_.run_id = new_run_id();
    manifest_.started_at = now_utc();
    manifest_.framework_version = framework_.version;
    manifest_.backend_id = backend_->id();
    manifest_.limits = config_.limits;
    manifest_.parallelism = config_.parallelism;
    for (const auto& agent : panel_) {
        manifest_.agent_specs.push_back(agent->id());
        manifest_.agent_settings.push_back(agent->settings());
    }
}

bool Pipeline::panel_concurrent_safe() const {
    return std::all_of(panel_.begin(), panel_.end(), [](const auto& a) { return a->concurrent_safe(); });
}

TransparencyReport Pipeline::score(const ModelIdentity& model, RetrievalStats* stats, std::size_t parallelism) {
    if (parallelism == 0) parallelism = config_.parallelism;
    RetrieveAllOptions opts;
    opts.limits = config_.limits;
    opts.parallelism = parallelism;
    opts.cache = cache_.get();
    auto bundles = retrieve_all(model, framework_, *backend_, opts, stats);

    std::vector<JudgingAgent*> agents;
    for (auto& a : panel_) agents.push_back(a.get());
    auto results = judge_model(bundles, framework_, agents, JudgeOptions{parallelism});
    auto report = aggregate(results, framework_, model, &bundles);
    report.run_manifest_ref = manifest_.run_id;
    return report;
}

std::vector<ModelIdentity> load_model_list(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError(path.string() + ": expected a JSON array of models");
    std::vector<ModelIdentity> out;
    std::set<std::string> seen;
    for (const auto& m : j) {
        auto id = model_identity_from_json(m);
        if (id.model_id.empty()) throw ConfigError("empty model_id in " + path.string());
        if (!seen.insert(id.model_id).second) throw ConfigError("duplicate model_id \"" + id.model_id + "\"");
        out.push_back(std::move(id));
    }
    if (out.empty()) throw ConfigError(path.string() + " lists no models");
    return out;
}

// ---------------------------------------------------------------------------
// corpus analysis

namespace {

using ConceptLookup = std::unordered_map<std::string, std::optional<std::string>>;

const std::optional<std::string>& concept_for(const std::string& heading, double threshold,
                                              const ConceptLexicon& lexicon, ConceptLookup& memo) {
    auto it = memo.find(heading);
    if (it == memo.end()) it = memo.emplace(heading, canonicalize(heading, lexicon, threshold).concept_id).first;
    return it->second;
}

Label category_label(const ModelCardDocument& card, const std::string& category, double threshold,
                     const ConceptLexicon& lexicon, ConceptLookup& memo) {
    EvidenceBundle bundle;
    bundle.subsection_id = category;
    std::vector<std::string> keywords;
    if (auto c = lexicon.concepts().find(category); c != lexicon.concepts().end())
        for (const auto& a : c->second.aliases) keywords.push_back(normalize_name(a));
    for (const auto& s : rolled_up_sections(card)) {
        const auto& concept_id = concept_for(s.heading_text, threshold, lexicon, memo);
        if (!concept_id || *concept_id != category) continue;
        auto norm = normalize_name(s.heading_text);
        if (!norm.empty() && std::find(keywords.begin(), keywords.end(), norm) == keywords.end())
            keywords.push_back(norm);
        EvidenceChunk chunk;
        chunk.source_url = card.source_id;
        chunk.title = s.heading_text;
        chunk.snippet = norm + "\n" + s.text;
        chunk.rank = static_cast<int>(bundle.chunks.size() + 1);
        bundle.chunks.push_back(std::move(chunk));
    }
    if (bundle.chunks.empty()) return Label::Absent;
    static const HeuristicAgent agent;
    return agent.evaluate_keywords(bundle, keywords).label;
}

}  // namespace

Label card_category_label(const ModelCardDocument& card, const std::string& category, double threshold,
                          const ConceptLexicon& lexicon) {
    ConceptLookup memo;
    return category_label(card, category, threshold, lexicon, memo);
}

CorpusAnalysis analyze_corpus(const std::vector<ModelCardDocument>& cards, double threshold,
                              const ConceptLexicon& lexicon) {
    CorpusAnalysis a;
    a.cards = cards.size();
    std::vector<std::string> all_names;
    std::set<std::string> seen;
    for (const auto& card : cards)
        for (auto& name : extract_section_names(card)) {
            ++a.headings;
            if (seen.insert(name).second) a.unique_names.push_back(name);
            all_names.push_back(std::move(name));
        }
    a.clusters = cluster_names(all_names, threshold);

    ConceptLookup memo;
    for (const auto& name : a.unique_names) {
        const auto& c = concept_for(name, threshold, lexicon, memo);
        if (c) a.concept_variants[*c].push_back(name);
        else a.unmatched.push_back(name);
    }

    for (const auto& card : cards)
        for (const auto& category : card_category_ids())
            a.depth[{card.source_id, category}] = category_label(card, category, threshold, lexicon, memo);
    a.presence = presence_stats(a.depth);
    return a;
}

std::string clusters_csv(const CorpusAnalysis& a) {
    std::ostringstream out;
    out << "cluster_id,representative,member,count\n";
    for (std::size_t i = 0; i < a.clusters.size(); ++i) {
        const auto& c = a.clusters[i];
        std::vector<std::pair<std::string, std::size_t>> counts;
        for (const auto& m : c.members) {
            auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& p) { return p.first == m; });
            if (it == counts.end()) counts.emplace_back(m, 1);
            else ++it->second;
        }
        for (const auto& [member, n] : counts)
            out << (i + 1) << "," << csv_escape(c.representative) << "," << csv_escape(member) << "," << n << "\n";
    }
    return out.str();
}

std::string concepts_csv(const CorpusAnalysis& a) {
    std::ostringstream out;
    out << "concept,variant_count,members\n";
    auto row = [&](const std::string& concept_id, const std::vector<std::string>& names) {
        std::string joined;
        for (const auto& n : names) joined += (joined.empty() ? "" : "|") + n;
        out << csv_escape(concept_id) << "," << names.size() << "," << csv_escape(joined) << "\n";
    };
    std::vector<std::pair<std::string, const std::vector<std::string>*>> rows;
    for (const auto& [k, v] : a.concept_variants) rows.emplace_back(k, &v);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& x, const auto& y) { return x.second->size() > y.second->size(); });
    for (const auto& [k, v] : rows) row(k, *v);
    if (!a.unmatched.empty()) row("(unmatched)", a.unmatched);
    return out.str();
}

}  // namespace cardaudit
