#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cardaudit {

struct CardSection {
    std::string heading_text;  // without markers or surrounding whitespace; empty for the preamble
    int depth = 0;             // 1..6, 0 for the preamble
    std::string heading_raw;   // exact source bytes of the heading line(s), terminator included
    std::string body_text;     // everything up to the next heading of any depth
    std::size_t char_count = 0;  // body_text.size() in bytes

    bool operator==(const CardSection&) const = default;
};

struct ParseWarning {
    std::size_t line = 0;  // 1-based
    std::string message;

    bool operator==(const ParseWarning&) const = default;
};

struct ModelCardDocument {
    std::vector<std::pair<std::string, std::string>> metadata;  // frontmatter, in document order
    std::string frontmatter_raw;  // the delimited block as it appeared, or empty
    std::vector<CardSection> sections;
    std::string raw_text;
    std::string source_id;
    std::vector<ParseWarning> warnings;

    std::optional<std::string> meta(std::string_view key) const;
    /// frontmatter_raw + every heading_raw + body_text, in order.
    std::string reconstruct() const;
};

/// Heading plus the text of all deeper sections nested beneath it.
struct RolledUpSection {
    std::string heading_text;
    int depth = 0;
    std::string text;
};

/// Never throws. Malformed frontmatter is kept as body text and reported in `warnings`.
ModelCardDocument parse_card(std::string_view text, std::string source_id = {});

std::vector<std::string> extract_section_names(const ModelCardDocument& doc);

std::vector<RolledUpSection> rolled_up_sections(const ModelCardDocument& doc);

/// Reads one file. Throws std::runtime_error when unreadable.
ModelCardDocument load_card_file(const std::filesystem::path& path);

/// All *.md files below `dir`, sorted by path. Throws std::runtime_error when `dir` is unreadable.
std::vector<std::filesystem::path> list_card_files(const std::filesystem::path& dir);

}  // namespace cardaudit
