#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "cardaudit/http.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>

#include "cardaudit/errors.hpp"

namespace cardaudit::http {
namespace {

std::atomic<std::uint64_t> g_calls{0};

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw RetrievalError(RetrievalError::Kind::Backend, "invalid URL \"" + url + "\"");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

Response post(const Request& request) {
    auto [origin, path] = split_url(request.url);
    httplib::Client client(origin);
    if (!client.is_valid())
        throw RetrievalError(RetrievalError::Kind::Backend, "unsupported URL \"" + request.url + "\"");
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);

    ++g_calls;
    auto result = client.Post(path, headers, request.body, request.content_type);
    if (!result) {
        auto err = result.error();
        auto kind = err == httplib::Error::ConnectionTimeout ? RetrievalError::Kind::Timeout
                                                             : RetrievalError::Kind::Transport;
        throw RetrievalError(kind, "request to " + origin + " failed: " + httplib::to_string(err));
    }
    return {result->status, result->body};
}

std::uint64_t call_count() { return g_calls.load(); }

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(burst), tokens_(burst), last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    if (rate_ <= 0) return;
    std::chrono::duration<double> wait{0};
    {
        std::lock_guard lock(mutex_);
        auto now = std::chrono::steady_clock::now();
        tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
        last_ = now;
        tokens_ -= 1.0;
        if (tokens_ < 0) wait = std::chrono::duration<double>(-tokens_ / rate_);
    }
    if (wait.count() > 0) std::this_thread::sleep_for(wait);
}

}  // namespace cardaudit::http
