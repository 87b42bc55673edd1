#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cardaudit {

inline constexpr double kDefaultMatchThreshold = 0.55;

/// Similarity of two distinct strings never reaches 1.0; it is capped here.
inline constexpr double kMaxDistinctSimilarity = 0.99;

struct Concept {
    std::string display_name;
    std::vector<std::string> aliases;

    bool operator==(const Concept&) const = default;
};

/// concept id -> concept. Aliases are unique across concepts after normalization.
class ConceptLexicon {
public:
    ConceptLexicon() = default;
    /// Throws ValidationError on empty or colliding aliases.
    explicit ConceptLexicon(std::map<std::string, Concept> concepts);

    const std::map<std::string, Concept>& concepts() const { return concepts_; }
    bool empty() const { return concepts_.empty(); }

    /// JSON object: concept id -> alias array, or -> {"display_name": ..., "aliases": [...]}.
    static ConceptLexicon from_json(std::string_view document);
    std::string to_json() const;

private:
    std::map<std::string, Concept> concepts_;
};

struct MatchResult {
    std::string input;
    std::optional<std::string> concept_id;  // set iff score >= threshold
    double score = 0.0;
    std::optional<std::string> matched_alias;
};

struct NameCluster {
    std::string representative;        // normalized name of the founding member
    std::vector<std::string> members;  // original names, duplicates kept, input order
};

/// Lowercase, strip punctuation and emoji, collapse whitespace, trim.
std::string normalize_name(std::string_view name);

/// max(token-set Jaccard, character-trigram Dice); inputs are expected to be normalized.
/// Symmetric, 1.0 iff equal, 0.0 with no shared tokens and no shared trigrams.
double similarity(std::string_view a, std::string_view b);

double token_jaccard(std::string_view a, std::string_view b);
double trigram_dice(std::string_view a, std::string_view b);

/// Best (concept, alias) by score, ties to the smallest concept id, then the smallest alias.
MatchResult canonicalize(std::string_view name, const ConceptLexicon& lexicon,
                         double threshold = kDefaultMatchThreshold);

/// Single-pass greedy first-fit clustering over normalized names.
std::vector<NameCluster> cluster_names(const std::vector<std::string>& names,
                                       double threshold = kDefaultMatchThreshold);

/// Ids of the eleven recurring model-card documentation categories.
const std::vector<std::string>& card_category_ids();

/// The card categories plus the other common heading concepts, without framework subsections.
const ConceptLexicon& card_heading_lexicon();

/// Builtin lexicon: the card categories, the heading concepts of the naming-variation
/// analysis (usage, evaluation, training, ...) and one concept per builtin framework subsection.
const ConceptLexicon& builtin_lexicon();

}  // namespace cardaudit
