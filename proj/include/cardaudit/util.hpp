#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace cardaudit {

using Timestamp = std::chrono::sys_seconds;

Timestamp now_utc();
/// "2026-10-15T07:36:00Z"
std::string format_rfc3339(Timestamp t);
/// Accepts the format produced by format_rfc3339. Throws ParseError otherwise.
Timestamp parse_rfc3339(std::string_view text);

std::string read_file(const std::filesystem::path& path);  // throws StorageError
/// Writes via a temp file in the same directory and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);  // throws StorageError

/// Runs fn(i) for i in [0, n) on up to `parallelism` threads. fn must not throw.
template <class Fn>
void parallel_for(std::size_t n, std::size_t parallelism, Fn&& fn) {
    parallelism = std::max<std::size_t>(1, std::min(parallelism, n));
    if (parallelism <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(parallelism);
    for (std::size_t w = 0; w < parallelism; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
}

}  // namespace cardaudit
