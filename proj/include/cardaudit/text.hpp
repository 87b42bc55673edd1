#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small ASCII/UTF-8 helpers shared by the parser, normalizer, retrieval and judges.
namespace cardaudit::text {

std::string to_lower(std::string_view s);  // ASCII only; other bytes untouched
std::string_view trim(std::string_view s);
bool is_alnum(char c);

/// Maximal runs of ASCII alphanumerics or non-ASCII bytes.
std::vector<std::string> tokenize_words(std::string_view s);

/// Start offsets of whole-word, case-insensitive occurrences of `keyword` in `haystack`.
/// A trailing plural "s"/"es" on the haystack side still counts as a match.
/// `haystack_lower` must already be lowercased.
std::vector<std::size_t> keyword_occurrences(std::string_view haystack_lower, std::string_view keyword);

bool contains_keyword(std::string_view haystack_lower, std::string_view keyword);

/// Decodes one code point at `pos`, advancing it. Invalid bytes decode as U+FFFD and advance by one.
char32_t next_code_point(std::string_view s, std::size_t& pos);

/// Clamps [begin, end) outward-safe so neither end splits a UTF-8 sequence.
void snap_to_utf8_boundaries(std::string_view s, std::size_t& begin, std::size_t& end);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

}  // namespace cardaudit::text
