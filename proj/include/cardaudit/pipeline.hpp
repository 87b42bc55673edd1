#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "cardaudit/cardparse.hpp"
#include "cardaudit/judge.hpp"
#include "cardaudit/normalize.hpp"
#include "cardaudit/retrieve.hpp"
#include "cardaudit/score.hpp"
#include "cardaudit/store.hpp"

namespace cardaudit {

struct RunConfig {
    std::string framework = "builtin";  // "builtin" or a path
    std::string backend;                // live | corpus:<dir>
    std::string agents = "heuristic,heuristic,heuristic";
    bool allow_small_panel = false;
    std::size_t parallelism = 4;
    RetrievalLimits limits;
    std::filesystem::path out_root = "out";
    bool use_cache = true;
    ProviderAggregation provider_mode = ProviderAggregation::Mean;
};

/// Reads "builtin" or a framework file. Throws ParseError/ValidationError/StorageError.
Framework resolve_framework(const std::string& spec);

/// Everything one run needs, resolved from a RunConfig. Throws ConfigError on a bad backend or panel.
class Pipeline {
public:
    explicit Pipeline(const RunConfig& config, std::shared_ptr<ChatTransport> transport = nullptr);

    const Framework& framework() const { return framework_; }
    RunManifest& manifest() { return manifest_; }
    const RunConfig& config() const { return config_; }
    RetrievalBackend& backend() { return *backend_; }

    /// generate_queries -> retrieve_all -> judge_model -> aggregate. Stamps the run id into the report.
    /// Throws RetrievalError when every subsection's retrieval fails.
    /// `parallelism` 0 means the configured value.
    TransparencyReport score(const ModelIdentity& model, RetrievalStats* stats = nullptr, std::size_t parallelism = 0);

    /// True when every agent on the panel tolerates concurrent calls.
    bool panel_concurrent_safe() const;

private:
    RunConfig config_;
    Framework framework_;
    std::unique_ptr<RetrievalBackend> backend_;
    AgentPanel panel_;
    RunManifest manifest_;
    std::unique_ptr<EvidenceCache> cache_;
};

/// JSON array of {model_id, display_name, provider, version_label?}. Throws ConfigError on duplicates.
std::vector<ModelIdentity> load_model_list(const std::filesystem::path& path);

struct CorpusAnalysis {
    std::size_t cards = 0;
    std::size_t headings = 0;
    std::vector<std::string> unique_names;  // first-seen order
    std::vector<NameCluster> clusters;
    std::map<std::string, std::vector<std::string>> concept_variants;  // concept -> unique raw names
    std::vector<std::string> unmatched;
    JudgmentMatrix depth;  // (card source id, category) -> label
    std::map<std::string, PresenceStats> presence;
};

/// Heading-name clustering, concept variation and category presence/depth over parsed cards.
CorpusAnalysis analyze_corpus(const std::vector<ModelCardDocument>& cards, double threshold,
                              const ConceptLexicon& lexicon = card_heading_lexicon());

/// Category label for one card: rolled-up sections whose heading maps to the category become
/// evidence, judged by the standard heuristic agent.
Label card_category_label(const ModelCardDocument& card, const std::string& category, double threshold,
                          const ConceptLexicon& lexicon);

std::string clusters_csv(const CorpusAnalysis& a);
std::string concepts_csv(const CorpusAnalysis& a);

}  // namespace cardaudit
