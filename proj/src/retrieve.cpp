#include "cardaudit/retrieve.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "cardaudit/errors.hpp"
#include "cardaudit/text.hpp"

namespace cardaudit {

using nlohmann::json;

std::vector<Query> generate_queries(const ModelIdentity& model, const Framework& framework) {
    std::vector<Query> out;
    for (const auto* sub : framework.subsections()) {
        Query q;
        q.model = model;
        q.subsection_id = sub->id;
        q.keywords = sub->keywords.empty() ? keywords_from_title(sub->title) : sub->keywords;
        q.query_text = "\"" + model.display_name + "\"";
        for (const auto& k : q.keywords) q.query_text += " " + k;
        q.query_text += " (model card OR system card OR technical report)";
        out.push_back(std::move(q));
    }
    return out;
}

// ---------------------------------------------------------------------------
// corpus backend

CorpusBackend::CorpusBackend(std::filesystem::path root) : root_(std::move(root)) {}

std::string CorpusBackend::id() const { return "corpus:" + root_.generic_string(); }

namespace {

struct ScoredDoc {
    std::string path;
    std::string title;
    std::string snippet;
    std::size_t score = 0;
};

std::string first_heading_or(std::string_view content, const std::string& fallback) {
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        auto line = text::trim(content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        if (!line.empty() && line.front() == '#') {
            auto t = line.find_first_not_of('#');
            if (t != std::string_view::npos) {
                auto title = text::trim(line.substr(t));
                if (!title.empty()) return std::string(title);
            }
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return fallback;
}

}  // namespace

std::vector<EvidenceChunk> CorpusBackend::search(const Query& query, const RetrievalLimits& limits) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root_, ec))
        throw RetrievalError(RetrievalError::Kind::Backend, "corpus directory not readable: " + root_.string());
    fs::path base = root_;
    if (!query.model.model_id.empty() && fs::is_directory(root_ / query.model.model_id, ec))
        base = root_ / query.model.model_id;

    std::vector<fs::path> files;
    for (fs::recursive_directory_iterator it(base, ec), end; !ec && it != end; it.increment(ec)) {
        auto ext = it->path().extension();
        if (it->is_regular_file() && (ext == ".md" || ext == ".txt")) files.push_back(it->path());
    }
    if (ec) throw RetrievalError(RetrievalError::Kind::Backend, "cannot list " + base.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());

    std::vector<ScoredDoc> scored;
    for (const auto& file : files) {
        std::string content;
        try {
            content = read_file(file);
        } catch (const StorageError& e) {
            throw RetrievalError(RetrievalError::Kind::Backend, e.what());
        }
        const std::string lower = text::to_lower(content);
        struct Hit {
            std::size_t start, end;
        };
        std::vector<Hit> hits;
        for (const auto& kw : query.keywords) {
            auto k = text::to_lower(text::trim(kw));
            for (auto p : text::keyword_occurrences(lower, k)) hits.push_back({p, p + k.size()});
        }
        if (hits.empty()) continue;
        std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.start < b.start; });

        // An optimal window can always be slid right to start at an occurrence.
        std::size_t best = 0, best_start = 0;
        for (std::size_t i = 0; i < hits.size(); ++i) {
            const std::size_t w0 = hits[i].start, w1 = w0 + kWindowChars;
            std::size_t count = 0;
            for (std::size_t k = i; k < hits.size() && hits[k].start < w1; ++k)
                if (hits[k].end <= w1) ++count;
            if (count > best) {
                best = count;
                best_start = w0;
            }
        }
        if (best == 0) continue;
        std::size_t b = best_start, e = std::min(content.size(), best_start + kWindowChars);
        text::snap_to_utf8_boundaries(content, b, e);
        ScoredDoc d;
        d.path = file.generic_string();
        d.title = first_heading_or(content, file.filename().string());
        d.snippet = content.substr(b, e - b);
        d.score = best;
        scored.push_back(std::move(d));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredDoc& a, const ScoredDoc& b) { return a.score > b.score; });

    std::vector<EvidenceChunk> out;
    const auto now = now_utc();
    for (std::size_t i = 0; i < scored.size() && i < limits.max_chunks; ++i)
        out.push_back({scored[i].path, scored[i].title, scored[i].snippet, static_cast<int>(i + 1), now});
    return out;
}

// ---------------------------------------------------------------------------
// live backend

LiveSearchConfig LiveSearchConfig::from_env() {
    LiveSearchConfig c;
    if (const char* key = std::getenv(kApiKeyEnv)) c.api_key = key;
    if (const char* url = std::getenv(kEndpointEnv); url && *url) c.endpoint = url;
    return c;
}

LiveSearchBackend::LiveSearchBackend(LiveSearchConfig config)
    : config_(std::move(config)), bucket_(config_.requests_per_second) {}

std::chrono::milliseconds LiveSearchBackend::backoff_for(int attempt) {
    double ms = static_cast<double>(config_.backoff_base.count()) * static_cast<double>(1 << attempt);
    if (config_.jitter) {
        std::lock_guard lock(rng_mutex_);
        ms *= std::uniform_real_distribution<double>(0.5, 1.5)(rng_);
    }
    return std::chrono::milliseconds(static_cast<long long>(ms));
}

std::vector<EvidenceChunk> LiveSearchBackend::search(const Query& query, const RetrievalLimits& limits) {
    if (config_.api_key.empty())
        throw RetrievalError(RetrievalError::Kind::Authentication,
                             std::string("search API key missing; set ") + LiveSearchConfig::kApiKeyEnv);
    http::Request req;
    req.url = config_.endpoint;
    req.body = json{{"query", query.query_text}, {"max_results", limits.max_chunks}}.dump();
    req.headers = {{"Authorization", "Bearer " + config_.api_key}, {"Accept", "application/json"}};
    req.timeout = limits.timeout;

    std::optional<RetrievalError> last;
    for (int attempt = 0; attempt < std::max(1, config_.max_attempts); ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(backoff_for(attempt - 1));
        bucket_.acquire();
        http::Response resp;
        try {
            resp = http::post(req);
        } catch (const RetrievalError& e) {
            if (!e.retryable()) throw;
            last = e;
            continue;
        }
        if (resp.status == 401 || resp.status == 403)
            throw RetrievalError(RetrievalError::Kind::Authentication,
                                 "search API rejected credentials (HTTP " + std::to_string(resp.status) + ")");
        if (resp.status == 429 || resp.status >= 500) {
            last = RetrievalError(RetrievalError::Kind::Transport, "search API HTTP " + std::to_string(resp.status));
            continue;
        }
        if (resp.status != 200)
            throw RetrievalError(RetrievalError::Kind::Backend, "search API HTTP " + std::to_string(resp.status));

        json j;
        try {
            j = json::parse(resp.body);
        } catch (const json::parse_error& e) {
            throw RetrievalError(RetrievalError::Kind::Backend, std::string("search API returned invalid JSON: ") + e.what());
        }
        std::vector<EvidenceChunk> out;
        const auto now = now_utc();
        if (j.contains("results") && j["results"].is_array()) {
            for (const auto& r : j["results"]) {
                if (!r.is_object()) continue;
                auto str = [&](const char* k) {
                    return r.contains(k) && r[k].is_string() ? r[k].get<std::string>() : std::string();
                };
                EvidenceChunk c;
                c.source_url = str("url");
                c.title = str("title");
                c.snippet = str("snippet");
                if (c.snippet.empty()) c.snippet = str("content");
                if (c.source_url.empty() || c.snippet.empty()) continue;
                c.rank = static_cast<int>(out.size() + 1);
                c.retrieved_at = now;
                out.push_back(std::move(c));
            }
        }
        return out;
    }
    throw *last;
}

std::unique_ptr<RetrievalBackend> make_backend(const std::string& spec) {
    if (spec == "live") return std::make_unique<LiveSearchBackend>(LiveSearchConfig::from_env());
    constexpr std::string_view prefix = "corpus:";
    if (spec.rfind(prefix, 0) == 0 && spec.size() > prefix.size())
        return std::make_unique<CorpusBackend>(spec.substr(prefix.size()));
    throw ConfigError("unknown backend \"" + spec + "\" (expected live or corpus:<dir>)");
}

// ---------------------------------------------------------------------------

EvidenceBundle retrieve_evidence(const Query& query, RetrievalBackend& backend, const RetrievalLimits& limits) {
    EvidenceBundle b;
    b.subsection_id = query.subsection_id;
    b.query = query;
    b.backend_id = backend.id();
    auto chunks = backend.search(query, limits);
    for (auto& c : chunks) {
        if (b.chunks.size() >= limits.max_chunks) break;
        if (c.source_url.empty() || c.snippet.empty()) continue;
        c.rank = static_cast<int>(b.chunks.size() + 1);
        b.chunks.push_back(std::move(c));
    }
    return b;
}

std::string query_hash(const Query& q) { return text::hex64(text::fnv1a64(q.query_text)); }

std::filesystem::path EvidenceCache::path_for(const std::string& model_id, const std::string& subsection_id) const {
    return root_ / model_id / (subsection_id + ".json");
}

std::optional<EvidenceBundle> EvidenceCache::load(const Query& query, const std::string& backend_id) const {
    auto p = path_for(query.model.model_id, query.subsection_id);
    std::error_code ec;
    if (!std::filesystem::exists(p, ec)) return std::nullopt;
    try {
        auto j = json::parse(read_file(p));
        if (j.value("backend_id", "") != backend_id || j.value("query_hash", "") != query_hash(query))
            return std::nullopt;
        auto b = bundle_from_json(j);
        if (b.failed) return std::nullopt;
        return b;
    } catch (const std::exception&) {
        return std::nullopt;  // unreadable cache entries are refetched
    }
}

void EvidenceCache::store(const EvidenceBundle& bundle) const {
    auto j = to_json(bundle);
    j["query_hash"] = query_hash(bundle.query);
    write_file_atomic(path_for(bundle.query.model.model_id, bundle.subsection_id), j.dump(2) + "\n");
}

std::map<std::string, EvidenceBundle> retrieve_all(const ModelIdentity& model, const Framework& framework,
                                                   RetrievalBackend& backend, const RetrieveAllOptions& options,
                                                   RetrievalStats* stats) {
    const auto queries = generate_queries(model, framework);
    std::vector<EvidenceBundle> bundles(queries.size());
    std::vector<char> hit(queries.size(), 0);
    const std::string backend_id = backend.id();

    parallel_for(queries.size(), options.parallelism, [&](std::size_t i) {
        const auto& q = queries[i];
        if (options.cache) {
            if (auto cached = options.cache->load(q, backend_id)) {
                bundles[i] = std::move(*cached);
                hit[i] = 1;
                return;
            }
        }
        try {
            bundles[i] = retrieve_evidence(q, backend, options.limits);
            if (options.cache) {
                try {
                    options.cache->store(bundles[i]);
                } catch (const StorageError&) {
                    // cache write failures do not affect the run
                }
            }
        } catch (const std::exception& e) {
            EvidenceBundle b;
            b.subsection_id = q.subsection_id;
            b.query = q;
            b.backend_id = backend_id;
            b.failed = true;
            b.error = e.what();
            bundles[i] = std::move(b);
        }
    });

    std::map<std::string, EvidenceBundle> out;
    RetrievalStats local;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        if (hit[i]) ++local.cache_hits;
        else ++local.cache_misses;
        if (bundles[i].failed) ++local.failures;
        out.emplace(bundles[i].subsection_id, std::move(bundles[i]));
    }
    if (stats) *stats = local;
    if (!out.empty() && local.failures == out.size())
        throw RetrievalError(RetrievalError::Kind::Backend,
                             "retrieval failed for every subsection: " + out.begin()->second.error);
    return out;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const ModelIdentity& m) {
    json j{{"model_id", m.model_id}, {"display_name", m.display_name}, {"provider", m.provider}};
    j["version_label"] = m.version_label ? json(*m.version_label) : json(nullptr);
    return j;
}

ModelIdentity model_identity_from_json(const json& j) {
    if (!j.is_object() || !j.contains("model_id") || !j["model_id"].is_string())
        throw ParseError("model identity: missing model_id");
    ModelIdentity m;
    m.model_id = j["model_id"].get<std::string>();
    m.display_name = j.value("display_name", m.model_id);
    m.provider = j.value("provider", "");
    if (j.contains("version_label") && j["version_label"].is_string())
        m.version_label = j["version_label"].get<std::string>();
    return m;
}

json to_json(const EvidenceBundle& b) {
    json chunks = json::array();
    for (const auto& c : b.chunks)
        chunks.push_back({{"rank", c.rank},
                          {"source_url", c.source_url},
                          {"title", c.title},
                          {"snippet", c.snippet},
                          {"retrieved_at", format_rfc3339(c.retrieved_at)}});
    json j{{"subsection_id", b.subsection_id},
           {"backend_id", b.backend_id},
           {"query", {{"model", to_json(b.query.model)},
                      {"subsection_id", b.query.subsection_id},
                      {"query_text", b.query.query_text},
                      {"keywords", b.query.keywords}}},
           {"chunks", std::move(chunks)},
           {"failed", b.failed}};
    if (b.failed) j["error"] = b.error;
    return j;
}

EvidenceBundle bundle_from_json(const json& j) {
    try {
        EvidenceBundle b;
        b.subsection_id = j.at("subsection_id").get<std::string>();
        b.backend_id = j.at("backend_id").get<std::string>();
        const auto& q = j.at("query");
        b.query.model = model_identity_from_json(q.at("model"));
        b.query.subsection_id = q.at("subsection_id").get<std::string>();
        b.query.query_text = q.at("query_text").get<std::string>();
        b.query.keywords = q.at("keywords").get<std::vector<std::string>>();
        for (const auto& c : j.at("chunks"))
            b.chunks.push_back({c.at("source_url").get<std::string>(), c.at("title").get<std::string>(),
                                c.at("snippet").get<std::string>(), c.at("rank").get<int>(),
                                parse_rfc3339(c.at("retrieved_at").get<std::string>())});
        b.failed = j.value("failed", false);
        b.error = j.value("error", "");
        return b;
    } catch (const json::exception& e) {
        throw ParseError(std::string("evidence bundle: ") + e.what());
    }
}

}  // namespace cardaudit
