#include "cardaudit/cardparse.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include "cardaudit/text.hpp"

namespace cardaudit {
namespace {

struct Line {
    std::string_view full;     // includes the terminator
    std::string_view content;  // terminator and trailing '\r' removed
};

std::vector<Line> split_lines(std::string_view text) {
    std::vector<Line> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
        std::string_view full = text.substr(pos, end - pos);
        std::string_view content = full;
        if (!content.empty() && content.back() == '\n') content.remove_suffix(1);
        if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
        out.push_back({full, content});
        pos = end;
    }
    return out;
}

std::size_t leading_spaces(std::string_view s) {
    std::size_t n = 0;
    while (n < s.size() && s[n] == ' ') ++n;
    return n;
}

bool is_blank(std::string_view s) { return text::trim(s).empty(); }

// Returns depth and heading text for an ATX heading line.
std::optional<std::pair<int, std::string>> atx_heading(std::string_view line) {
    std::size_t indent = leading_spaces(line);
    if (indent > 3) return std::nullopt;
    std::string_view s = line.substr(indent);
    int depth = 0;
    while (depth < static_cast<int>(s.size()) && s[depth] == '#') ++depth;
    if (depth < 1 || depth > 6) return std::nullopt;
    s.remove_prefix(depth);
    if (!s.empty() && s.front() != ' ' && s.front() != '\t') return std::nullopt;
    s = text::trim(s);
    // optional closing sequence
    std::size_t end = s.size();
    while (end > 0 && s[end - 1] == '#') --end;
    if (end == 0) s = {};
    else if (end < s.size() && (s[end - 1] == ' ' || s[end - 1] == '\t')) s = text::trim(s.substr(0, end));
    return std::make_pair(depth, std::string(s));
}

// 0 when not an underline, else 1 ('=') or 2 ('-').
int setext_underline(std::string_view line) {
    std::size_t indent = leading_spaces(line);
    if (indent > 3) return 0;
    std::string_view s = text::trim(line);
    if (s.empty()) return 0;
    char c = s.front();
    if (c != '=' && c != '-') return 0;
    if (!std::all_of(s.begin(), s.end(), [c](char x) { return x == c; })) return 0;
    return c == '=' ? 1 : 2;
}

bool can_be_setext_text(std::string_view line) {
    if (is_blank(line) || leading_spaces(line) > 3) return false;
    std::string_view s = text::trim(line);
    static constexpr std::string_view blockish[] = {"- ", "* ", "+ ", "> ", "|", "<", "```", "~~~"};
    for (auto p : blockish)
        if (s.substr(0, p.size()) == p) return false;
    if (setext_underline(line)) return false;
    return !atx_heading(line).has_value();
}

// Fence opener: returns marker char and run length.
std::optional<std::pair<char, std::size_t>> fence_marker(std::string_view line) {
    std::size_t indent = leading_spaces(line);
    if (indent > 3) return std::nullopt;
    std::string_view s = line.substr(indent);
    if (s.empty() || (s.front() != '`' && s.front() != '~')) return std::nullopt;
    char c = s.front();
    std::size_t n = 0;
    while (n < s.size() && s[n] == c) ++n;
    if (n < 3) return std::nullopt;
    return std::make_pair(c, n);
}

bool has_html_heading(std::string_view line) {
    static const std::regex re(R"(<h[1-6][\s>])", std::regex::icase);
    return std::regex_search(line.begin(), line.end(), re);
}

struct Frontmatter {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::size_t line_count = 0;  // lines consumed, delimiters included
};

std::optional<Frontmatter> parse_frontmatter(const std::vector<Line>& lines, std::vector<ParseWarning>& warnings) {
    if (lines.empty() || lines[0].content != "---") return std::nullopt;
    std::size_t close = 0;
    for (std::size_t i = 1; i < lines.size(); ++i)
        if (lines[i].content == "---") {
            close = i;
            break;
        }
    if (close == 0) {
        warnings.push_back({1, "frontmatter opened but never closed; treated as body text"});
        return std::nullopt;
    }

    static const std::regex kv(R"(^([^\s:#][^:]*?)\s*:(?:[ \t]+(.*))?$)");
    Frontmatter fm;
    for (std::size_t i = 1; i < close; ++i) {
        std::string_view c = lines[i].content;
        std::string_view t = text::trim(c);
        if (t.empty() || t.front() == '#') continue;
        bool continuation = c.front() == ' ' || c.front() == '\t' || t.substr(0, 2) == "- " || t == "-";
        if (continuation) {
            if (fm.metadata.empty()) {
                warnings.push_back({i + 1, "frontmatter continuation line without a key; block treated as body text"});
                return std::nullopt;
            }
            auto& value = fm.metadata.back().second;
            value += value.empty() ? std::string(t) : "\n" + std::string(t);
            continue;
        }
        std::match_results<std::string_view::const_iterator> m;
        if (!std::regex_match(c.begin(), c.end(), m, kv)) {
            warnings.push_back({i + 1, "malformed frontmatter line \"" + std::string(c) + "\"; block treated as body text"});
            return std::nullopt;
        }
        std::string key = m[1].str();
        std::string value = m[2].matched ? std::string(text::trim(m[2].str())) : std::string();
        auto it = std::find_if(fm.metadata.begin(), fm.metadata.end(), [&](const auto& p) { return p.first == key; });
        if (it != fm.metadata.end()) {
            warnings.push_back({i + 1, "duplicate frontmatter key \"" + key + "\"; later value kept"});
            it->second = std::move(value);
            // keep the updated entry last so continuations attach to it
            std::rotate(it, it + 1, fm.metadata.end());
        } else {
            fm.metadata.emplace_back(std::move(key), std::move(value));
        }
    }
    fm.line_count = close + 1;
    return fm;
}

}  // namespace

std::optional<std::string> ModelCardDocument::meta(std::string_view key) const {
    for (const auto& [k, v] : metadata)
        if (k == key) return v;
    return std::nullopt;
}

std::string ModelCardDocument::reconstruct() const {
    std::string out = frontmatter_raw;
    for (const auto& s : sections) {
        out += s.heading_raw;
        out += s.body_text;
    }
    return out;
}

ModelCardDocument parse_card(std::string_view input, std::string source_id) {
    ModelCardDocument doc;
    doc.raw_text = std::string(input);
    doc.source_id = std::move(source_id);
    const auto lines = split_lines(input);

    std::size_t first = 0;
    if (auto fm = parse_frontmatter(lines, doc.warnings)) {
        doc.metadata = std::move(fm->metadata);
        for (std::size_t i = 0; i < fm->line_count; ++i) doc.frontmatter_raw += lines[i].full;
        first = fm->line_count;
    }

    CardSection current;  // preamble until the first heading
    bool have_heading = false;
    auto flush = [&]() {
        if (have_heading || !current.body_text.empty()) {
            current.char_count = current.body_text.size();
            doc.sections.push_back(std::move(current));
        }
        current = CardSection{};
    };

    std::optional<std::pair<char, std::size_t>> open_fence;
    bool prev_blank_or_boundary = true;  // previous line ended a block (blank, heading, start)
    for (std::size_t i = first; i < lines.size(); ++i) {
        const auto& ln = lines[i];
        if (open_fence) {
            auto f = fence_marker(ln.content);
            if (f && f->first == open_fence->first && f->second >= open_fence->second &&
                is_blank(text::trim(ln.content).substr(f->second)))
                open_fence.reset();
            current.body_text += ln.full;
            prev_blank_or_boundary = false;
            continue;
        }
        if (auto f = fence_marker(ln.content)) {
            open_fence = f;
            current.body_text += ln.full;
            prev_blank_or_boundary = false;
            continue;
        }
        if (auto h = atx_heading(ln.content)) {
            flush();
            have_heading = true;
            current.depth = h->first;
            current.heading_text = std::move(h->second);
            current.heading_raw = std::string(ln.full);
            prev_blank_or_boundary = true;
            continue;
        }
        if (prev_blank_or_boundary && i + 1 < lines.size() && can_be_setext_text(ln.content)) {
            if (int level = setext_underline(lines[i + 1].content)) {
                flush();
                have_heading = true;
                current.depth = level;
                current.heading_text = std::string(text::trim(ln.content));
                current.heading_raw = std::string(ln.full) + std::string(lines[i + 1].full);
                ++i;
                prev_blank_or_boundary = true;
                continue;
            }
        }
        if (has_html_heading(ln.content))
            doc.warnings.push_back({i + 1, "HTML heading tag kept as body text"});
        current.body_text += ln.full;
        prev_blank_or_boundary = is_blank(ln.content);
    }
    flush();
    return doc;
}

std::vector<std::string> extract_section_names(const ModelCardDocument& doc) {
    std::vector<std::string> out;
    for (const auto& s : doc.sections)
        if (s.depth >= 1) out.push_back(s.heading_text);
    return out;
}

std::vector<RolledUpSection> rolled_up_sections(const ModelCardDocument& doc) {
    std::vector<RolledUpSection> out;
    const auto& secs = doc.sections;
    for (std::size_t i = 0; i < secs.size(); ++i) {
        if (secs[i].depth < 1) continue;
        RolledUpSection r{secs[i].heading_text, secs[i].depth, secs[i].body_text};
        for (std::size_t k = i + 1; k < secs.size() && secs[k].depth > secs[i].depth; ++k)
            r.text += secs[k].heading_raw + secs[k].body_text;
        out.push_back(std::move(r));
    }
    return out;
}

ModelCardDocument load_card_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_card(ss.str(), path.string());
}

std::vector<std::filesystem::path> list_card_files(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw std::runtime_error("not a readable directory: " + dir.string());
    std::vector<fs::path> out;
    fs::recursive_directory_iterator it(dir, ec), end;
    if (ec) throw std::runtime_error("cannot read " + dir.string() + ": " + ec.message());
    for (; it != end; it.increment(ec)) {
        if (ec) throw std::runtime_error("cannot read " + dir.string() + ": " + ec.message());
        if (it->is_regular_file() && it->path().extension() == ".md") out.push_back(it->path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace cardaudit
