#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cardaudit/http.hpp"
#include "cardaudit/schema.hpp"
#include "cardaudit/util.hpp"

namespace cardaudit {

struct ModelIdentity {
    std::string model_id;
    std::string display_name;
    std::string provider;
    std::optional<std::string> version_label;

    bool operator==(const ModelIdentity&) const = default;
};

struct Query {
    ModelIdentity model;
    std::string subsection_id;
    std::string query_text;
    std::vector<std::string> keywords;  // the subsection keywords the text was built from

    bool operator==(const Query&) const = default;
};

struct EvidenceChunk {
    std::string source_url;
    std::string title;
    std::string snippet;
    int rank = 0;  // 1-based, contiguous within a bundle
    Timestamp retrieved_at{};

    bool operator==(const EvidenceChunk&) const = default;
};

struct EvidenceBundle {
    std::string subsection_id;
    Query query;
    std::vector<EvidenceChunk> chunks;
    std::string backend_id;
    bool failed = false;  // retrieval error; chunks empty and `error` set
    std::string error;

    bool operator==(const EvidenceBundle&) const = default;
};

struct RetrievalLimits {
    std::size_t max_chunks = 8;
    std::chrono::milliseconds timeout{15000};
};

/// Evidence source. Implementations must be safe to call concurrently.
class RetrievalBackend {
public:
    virtual ~RetrievalBackend() = default;
    virtual std::string id() const = 0;
    /// Ranked results, best first. Throws RetrievalError.
    virtual std::vector<EvidenceChunk> search(const Query& query, const RetrievalLimits& limits) = 0;
};

/// Offline backend over a directory of .md/.txt files. If `<dir>/<model_id>` exists,
/// only that subdirectory is searched for the model.
class CorpusBackend final : public RetrievalBackend {
public:
    static constexpr std::size_t kWindowChars = 600;

    explicit CorpusBackend(std::filesystem::path root);
    std::string id() const override;
    std::vector<EvidenceChunk> search(const Query& query, const RetrievalLimits& limits) override;

private:
    std::filesystem::path root_;
};

struct LiveSearchConfig {
    std::string endpoint = "https://api.perplexity.ai/search";
    std::string api_key;
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{500};
    double requests_per_second = 2.0;
    bool jitter = true;

    static constexpr const char* kApiKeyEnv = "CARDAUDIT_SEARCH_API_KEY";
    static constexpr const char* kEndpointEnv = "CARDAUDIT_SEARCH_URL";
    /// Reads the key and optional endpoint override from the environment.
    static LiveSearchConfig from_env();
};

/// HTTP search API: POST {"query", "max_results"} with a bearer token, expects {"results": [{title, url, snippet}]}.
class LiveSearchBackend final : public RetrievalBackend {
public:
    explicit LiveSearchBackend(LiveSearchConfig config);
    std::string id() const override { return "live"; }
    std::vector<EvidenceChunk> search(const Query& query, const RetrievalLimits& limits) override;

private:
    std::chrono::milliseconds backoff_for(int attempt);

    LiveSearchConfig config_;
    http::TokenBucket bucket_;
    std::mutex rng_mutex_;
    std::mt19937 rng_{std::random_device{}()};
};

/// Parses `live` or `corpus:<dir>`. Throws ConfigError.
std::unique_ptr<RetrievalBackend> make_backend(const std::string& spec);

/// One query per subsection, in framework order.
std::vector<Query> generate_queries(const ModelIdentity& model, const Framework& framework);

/// Truncates to max_chunks and renumbers ranks 1..n. Throws RetrievalError.
EvidenceBundle retrieve_evidence(const Query& query, RetrievalBackend& backend, const RetrievalLimits& limits);

/// On-disk bundle cache: <root>/<model_id>/<subsection_id>.json, keyed by backend id and query hash.
class EvidenceCache {
public:
    explicit EvidenceCache(std::filesystem::path root) : root_(std::move(root)) {}
    std::optional<EvidenceBundle> load(const Query& query, const std::string& backend_id) const;
    void store(const EvidenceBundle& bundle) const;
    std::filesystem::path path_for(const std::string& model_id, const std::string& subsection_id) const;

private:
    std::filesystem::path root_;
};

struct RetrievalStats {
    std::size_t cache_hits = 0;
    std::size_t cache_misses = 0;
    std::size_t failures = 0;
};

struct RetrieveAllOptions {
    RetrievalLimits limits;
    std::size_t parallelism = 4;
    const EvidenceCache* cache = nullptr;
};

/// One bundle per subsection. Failed subsections are marked, not thrown; throws RetrievalError
/// only when every subsection fails.
std::map<std::string, EvidenceBundle> retrieve_all(const ModelIdentity& model, const Framework& framework,
                                                   RetrievalBackend& backend, const RetrieveAllOptions& options,
                                                   RetrievalStats* stats = nullptr);

nlohmann::json to_json(const ModelIdentity& m);
ModelIdentity model_identity_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvidenceBundle& b);
EvidenceBundle bundle_from_json(const nlohmann::json& j);

std::string query_hash(const Query& q);

}  // namespace cardaudit
