#include "cardaudit/text.hpp"

#include <cstdio>

namespace cardaudit::text {

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::string_view trim(std::string_view s) {
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

bool is_alnum(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

namespace {
bool word_byte(char c) { return is_alnum(c) || (static_cast<unsigned char>(c) & 0x80); }
}  // namespace

std::vector<std::string> tokenize_words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (word_byte(c)) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::size_t> keyword_occurrences(std::string_view hay, std::string_view keyword) {
    std::vector<std::size_t> out;
    std::string kw = to_lower(trim(keyword));
    if (kw.empty()) return out;
    std::size_t pos = 0;
    while ((pos = hay.find(kw, pos)) != std::string_view::npos) {
        bool start_ok = pos == 0 || !is_alnum(hay[pos - 1]);
        std::size_t end = pos + kw.size();
        bool end_ok = end >= hay.size() || !is_alnum(hay[end]);
        if (!end_ok && is_alnum(kw.back())) {
            // plural forms
            if (hay[end] == 's' && (end + 1 >= hay.size() || !is_alnum(hay[end + 1]))) end_ok = true;
            else if (hay.substr(end, 2) == "es" && (end + 2 >= hay.size() || !is_alnum(hay[end + 2]))) end_ok = true;
        }
        if (!is_alnum(kw.front())) start_ok = true;
        if (start_ok && end_ok) {
            out.push_back(pos);
            pos = pos + kw.size();
        } else {
            ++pos;
        }
    }
    return out;
}

bool contains_keyword(std::string_view hay, std::string_view keyword) {
    return !keyword_occurrences(hay, keyword).empty();
}

char32_t next_code_point(std::string_view s, std::size_t& pos) {
    auto b0 = static_cast<unsigned char>(s[pos]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) { ++pos; return b0; }
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { ++pos; return 0xFFFD; }
    if (pos + len > s.size()) { ++pos; return 0xFFFD; }
    for (int i = 1; i < len; ++i) {
        auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) { ++pos; return 0xFFFD; }
        cp = (cp << 6) | (b & 0x3F);
    }
    pos += len;
    return cp;
}

void snap_to_utf8_boundaries(std::string_view s, std::size_t& begin, std::size_t& end) {
    auto cont = [&](std::size_t i) { return i < s.size() && (static_cast<unsigned char>(s[i]) & 0xC0) == 0x80; };
    while (begin > 0 && cont(begin)) --begin;
    while (end < s.size() && cont(end)) ++end;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace cardaudit::text
