#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace cardaudit {

/// Percentage-point weight held as an integer count of tenths (0.5 -> 5).
class Weight {
public:
    constexpr Weight() = default;
    static constexpr Weight from_tenths(std::int64_t tenths) { return Weight(tenths); }

    /// Parses "15", "0.5", "2.0". More than one decimal place is rejected.
    static Weight parse(std::string_view text);

    constexpr std::int64_t tenths() const { return tenths_; }
    std::string to_string() const;  // always one decimal: "15.0", "0.5"

    constexpr Weight operator+(Weight o) const { return Weight(tenths_ + o.tenths_); }
    constexpr Weight& operator+=(Weight o) { tenths_ += o.tenths_; return *this; }
    constexpr Weight operator-(Weight o) const { return Weight(tenths_ - o.tenths_); }
    constexpr auto operator<=>(const Weight&) const = default;

private:
    constexpr explicit Weight(std::int64_t t) : tenths_(t) {}
    std::int64_t tenths_ = 0;
};

/// Fraction of a subsection's weight earned by a label, in thousandths (0.5 -> 500).
class Credit {
public:
    constexpr Credit() = default;
    static constexpr Credit from_permille(std::int64_t p) { return Credit(p); }

    /// Parses "1", "0.5", "0.333". Must lie in [0, 1] with at most three decimals.
    static Credit parse(std::string_view text);

    constexpr std::int64_t permille() const { return permille_; }
    double as_double() const { return static_cast<double>(permille_) / 1000.0; }
    std::string to_string() const;  // "0.5", "1.0", "0.333"

    constexpr auto operator<=>(const Credit&) const = default;

private:
    constexpr explicit Credit(std::int64_t p) : permille_(p) {}
    std::int64_t permille_ = 0;
};

/// Score points in units of 1e-4 pt. Weight (tenths) x Credit (permille) lands here exactly.
class Points {
public:
    static constexpr std::int64_t kUnitsPerPoint = 10000;

    constexpr Points() = default;
    static constexpr Points from_units(std::int64_t u) { return Points(u); }
    static constexpr Points of(Weight w) { return Points(w.tenths() * 1000); }
    static constexpr Points earned(Weight w, Credit c) { return Points(w.tenths() * c.permille()); }

    /// Accepts any decimal with up to four fractional digits, optionally signed.
    static Points parse(std::string_view text);

    constexpr std::int64_t units() const { return units_; }
    double as_double() const { return static_cast<double>(units_) / kUnitsPerPoint; }

    /// Exact rendering with trailing zeros trimmed but at least one decimal: "87.5", "0.25", "-4.0".
    std::string to_string() const;
    /// Rounded half away from zero to one decimal: 0.25 -> "0.3".
    std::string to_string_1dp() const;
    /// Same rounding as to_string_1dp, kept as a value.
    Points rounded_1dp() const;

    constexpr Points operator+(Points o) const { return Points(units_ + o.units_); }
    constexpr Points operator-(Points o) const { return Points(units_ - o.units_); }
    constexpr Points operator-() const { return Points(-units_); }
    constexpr Points& operator+=(Points o) { units_ += o.units_; return *this; }
    constexpr Points& operator-=(Points o) { units_ -= o.units_; return *this; }
    constexpr auto operator<=>(const Points&) const = default;

private:
    constexpr explicit Points(std::int64_t u) : units_(u) {}
    std::int64_t units_ = 0;
};

}  // namespace cardaudit
