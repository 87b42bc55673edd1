#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cardaudit/fixed_point.hpp"

namespace cardaudit {

enum class Label : int { Absent = 0, Mentioned = 1, Detailed = 2 };

std::string_view to_string(Label label);
/// Case-insensitive; also accepts "Mentioned Only".
Label parse_label(std::string_view text);

struct Subsection {
    std::string id;  // "<section>.<slug>", unique across the framework
    std::string title;
    Weight weight;
    std::string criteria_prompt;
    /// Search and evidence keywords. Derived from the title when the file omits them.
    std::vector<std::string> keywords;
    nlohmann::json extensions = nlohmann::json::object();

    bool operator==(const Subsection&) const = default;
};

struct Section {
    std::string id;
    std::string title;
    Weight weight;
    std::vector<Subsection> subsections;
    nlohmann::json extensions = nlohmann::json::object();

    bool operator==(const Section&) const = default;
};

/// Label -> credit mapping. Configurable so partial-credit policies other than 0.5 are first-class.
struct CreditPolicy {
    Credit detailed = Credit::from_permille(1000);
    Credit mentioned = Credit::from_permille(500);
    Credit absent = Credit::from_permille(0);

    Credit credit_of(Label label) const;
    bool operator==(const CreditPolicy&) const = default;
};

struct Framework {
    std::string version;
    std::vector<Section> sections;
    CreditPolicy credits;
    nlohmann::json extensions = nlohmann::json::object();

    std::size_t subsection_count() const;
    /// nullptr when absent.
    const Subsection* find_subsection(std::string_view id) const;
    const Section* section_of(std::string_view subsection_id) const;
    /// All subsections in document order.
    std::vector<const Subsection*> subsections() const;

    bool operator==(const Framework&) const = default;
};

struct Violation {
    std::string path;  // e.g. "sections[5].subsections"
    std::string message;

    bool operator==(const Violation&) const = default;
};

/// The weighted rubric as printed in the published table: 8 sections, weights in percentage points.
const Framework& builtin_framework();

/// Empty iff every invariant holds. Never throws.
std::vector<Violation> validate_framework(const Framework& f);

/// Parses the on-disk JSON format and validates it.
/// Throws ParseError on malformed input and ValidationError naming the first violation.
Framework load_framework(std::string_view document);

std::string serialize_framework(const Framework& f);

nlohmann::json framework_to_json(const Framework& f);
Framework framework_from_json(const nlohmann::json& j);  // decode only, no validation

/// Lowercase keywords from a title, dropping stopwords and punctuation.
std::vector<std::string> keywords_from_title(std::string_view title);

}  // namespace cardaudit
