#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace cardaudit::http {

struct Request {
    std::string url;  // http:// or https://, path included
    std::string body;
    std::string content_type = "application/json";
    std::vector<std::pair<std::string, std::string>> headers;
    std::chrono::milliseconds timeout{30000};
};

struct Response {
    int status = 0;
    std::string body;
};

/// One POST. Throws RetrievalError (Transport or Timeout) when no response arrives.
Response post(const Request& request);

/// Number of HTTP requests attempted by this process.
std::uint64_t call_count();

/// Blocking token bucket: `rate` tokens per second, capacity `burst`.
class TokenBucket {
public:
    explicit TokenBucket(double rate_per_second, double burst = 1.0);
    void acquire();

private:
    std::mutex mutex_;
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

}  // namespace cardaudit::http
