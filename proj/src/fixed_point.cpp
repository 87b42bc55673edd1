#include "cardaudit/fixed_point.hpp"

#include <cstdlib>
#include <limits>

#include "cardaudit/errors.hpp"

namespace cardaudit {
namespace {

// Parses an optionally signed decimal into an integer scaled by 10^decimals.
// Extra fractional digits are allowed only when they are zeros.
std::int64_t parse_scaled(std::string_view text, int decimals, bool allow_negative, const char* what) {
    auto fail = [&]() -> std::int64_t {
        throw ParseError(std::string("invalid ") + what + " \"" + std::string(text) + "\"");
    };
    std::string_view s = text;
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (s.empty()) return fail();

    bool negative = false;
    if (s.front() == '-' || s.front() == '+') {
        negative = s.front() == '-';
        if (negative && !allow_negative) return fail();
        s.remove_prefix(1);
    }
    std::int64_t whole = 0;
    std::size_t i = 0;
    bool any_digit = false;
    for (; i < s.size() && s[i] != '.'; ++i) {
        if (s[i] < '0' || s[i] > '9') return fail();
        if (whole > std::numeric_limits<std::int64_t>::max() / 100000) return fail();
        whole = whole * 10 + (s[i] - '0');
        any_digit = true;
    }
    std::int64_t frac = 0;
    int frac_digits = 0;
    if (i < s.size()) {
        ++i;  // '.'
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') return fail();
            any_digit = true;
            if (frac_digits < decimals) {
                frac = frac * 10 + (s[i] - '0');
                ++frac_digits;
            } else if (s[i] != '0') {
                return fail();
            }
        }
    }
    if (!any_digit) return fail();
    for (; frac_digits < decimals; ++frac_digits) frac *= 10;
    std::int64_t scale = 1;
    for (int d = 0; d < decimals; ++d) scale *= 10;
    std::int64_t value = whole * scale + frac;
    return negative ? -value : value;
}

std::string render_scaled(std::int64_t value, int decimals, int min_decimals) {
    std::string sign = value < 0 ? "-" : "";
    std::uint64_t mag = value < 0 ? static_cast<std::uint64_t>(-(value + 1)) + 1 : static_cast<std::uint64_t>(value);
    std::uint64_t scale = 1;
    for (int d = 0; d < decimals; ++d) scale *= 10;
    std::string whole = std::to_string(mag / scale);
    std::string frac = std::to_string(mag % scale);
    frac.insert(0, static_cast<std::size_t>(decimals) - frac.size(), '0');
    while (static_cast<int>(frac.size()) > min_decimals && frac.back() == '0') frac.pop_back();
    return sign + whole + (frac.empty() ? "" : "." + frac);
}

}  // namespace

Weight Weight::parse(std::string_view text) { return Weight(parse_scaled(text, 1, false, "weight")); }

std::string Weight::to_string() const { return render_scaled(tenths_, 1, 1); }

Credit Credit::parse(std::string_view text) {
    auto p = parse_scaled(text, 3, false, "credit");
    if (p > 1000) throw ParseError("credit \"" + std::string(text) + "\" exceeds 1.0");
    return Credit(p);
}

std::string Credit::to_string() const { return render_scaled(permille_, 3, 1); }

Points Points::parse(std::string_view text) { return Points(parse_scaled(text, 4, true, "points")); }

std::string Points::to_string() const { return render_scaled(units_, 4, 1); }

Points Points::rounded_1dp() const {
    constexpr std::int64_t step = kUnitsPerPoint / 10;
    std::int64_t mag = units_ < 0 ? -units_ : units_;
    std::int64_t r = (mag + step / 2) / step * step;
    return Points(units_ < 0 ? -r : r);
}

std::string Points::to_string_1dp() const { return render_scaled(rounded_1dp().units_ / 1000, 1, 1); }

}  // namespace cardaudit
