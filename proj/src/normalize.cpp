#include "cardaudit/normalize.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "cardaudit/errors.hpp"
#include "cardaudit/schema.hpp"
#include "cardaudit/text.hpp"

namespace cardaudit {
namespace {

bool stripped_code_point(char32_t cp) {
    return (cp >= 0x00A0 && cp <= 0x00BF) || cp == 0x00D7 || cp == 0x00F7 ||
           (cp >= 0x2000 && cp <= 0x2BFF) || (cp >= 0x2E00 && cp <= 0x2E7F) ||
           (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFE00 && cp <= 0xFE0F) ||
           (cp >= 0xFE30 && cp <= 0xFE4F) || (cp >= 0xFF01 && cp <= 0xFF0F) ||
           (cp >= 0x1F000 && cp <= 0x1FAFF) || (cp >= 0xE0000 && cp <= 0xE007F) || cp == 0xFFFD;
}

std::set<std::string> token_set(std::string_view s) {
    std::set<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t sp = s.find(' ', pos);
        if (sp == std::string_view::npos) sp = s.size();
        if (sp > pos) out.emplace(s.substr(pos, sp - pos));
        pos = sp + 1;
    }
    return out;
}

std::set<std::string_view> trigram_set(std::string_view s) {
    std::set<std::string_view> out;
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) out.insert(s.substr(i, 3));
    return out;
}

template <class Set>
std::size_t intersection_size(const Set& a, const Set& b) {
    std::size_t n = 0;
    for (const auto& x : a) n += b.count(x);
    return n;
}

}  // namespace

std::string normalize_name(std::string_view name) {
    std::string out;
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < name.size()) {
        std::size_t start = pos;
        char32_t cp = text::next_code_point(name, pos);
        bool keep = false;
        if (cp < 0x80) {
            char c = static_cast<char>(cp);
            if (c == '\'') continue;  // "what's" -> "whats"
            keep = text::is_alnum(c);
        } else if (cp == 0x2019) {
            continue;
        } else {
            keep = !stripped_code_point(cp);
        }
        if (!keep) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        if (cp < 0x80) out.push_back(static_cast<char>(cp >= 'A' && cp <= 'Z' ? cp - 'A' + 'a' : cp));
        else out.append(name.substr(start, pos - start));
    }
    return out;
}

double token_jaccard(std::string_view a, std::string_view b) {
    auto ta = token_set(a), tb = token_set(b);
    if (ta.empty() || tb.empty()) return 0.0;
    std::size_t inter = intersection_size(ta, tb);
    return static_cast<double>(inter) / static_cast<double>(ta.size() + tb.size() - inter);
}

double trigram_dice(std::string_view a, std::string_view b) {
    auto ga = trigram_set(a), gb = trigram_set(b);
    if (ga.empty() || gb.empty()) return 0.0;
    return 2.0 * static_cast<double>(intersection_size(ga, gb)) / static_cast<double>(ga.size() + gb.size());
}

double similarity(std::string_view a, std::string_view b) {
    if (a == b) return 1.0;
    return std::min(std::max(token_jaccard(a, b), trigram_dice(a, b)), kMaxDistinctSimilarity);
}

ConceptLexicon::ConceptLexicon(std::map<std::string, Concept> concepts) : concepts_(std::move(concepts)) {
    std::map<std::string, std::string> owner;
    for (const auto& [id, c] : concepts_) {
        if (id.empty()) throw ValidationError("lexicon: empty concept id");
        for (const auto& alias : c.aliases) {
            auto norm = normalize_name(alias);
            if (norm.empty()) throw ValidationError("lexicon: concept \"" + id + "\" has an empty alias");
            auto [it, inserted] = owner.emplace(norm, id);
            if (!inserted && it->second != id)
                throw ValidationError("lexicon: alias \"" + alias + "\" maps to both \"" + it->second + "\" and \"" + id + "\"");
        }
    }
}

ConceptLexicon ConceptLexicon::from_json(std::string_view document) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("lexicon: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("lexicon: expected a JSON object");
    std::map<std::string, Concept> concepts;
    for (auto it = j.begin(); it != j.end(); ++it) {
        Concept c;
        c.display_name = it.key();
        const nlohmann::json* aliases = &it.value();
        if (it.value().is_object()) {
            if (it.value().contains("display_name")) c.display_name = it.value().at("display_name").get<std::string>();
            if (!it.value().contains("aliases")) throw ParseError("lexicon." + it.key() + ": missing aliases");
            aliases = &it.value().at("aliases");
        }
        if (!aliases->is_array()) throw ParseError("lexicon." + it.key() + ": expected an alias array");
        for (const auto& a : *aliases) {
            if (!a.is_string()) throw ParseError("lexicon." + it.key() + ": aliases must be strings");
            c.aliases.push_back(a.get<std::string>());
        }
        concepts.emplace(it.key(), std::move(c));
    }
    return ConceptLexicon(std::move(concepts));
}

std::string ConceptLexicon::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, c] : concepts_) j[id] = c.aliases;
    return j.dump(2) + "\n";
}

MatchResult canonicalize(std::string_view name, const ConceptLexicon& lexicon, double threshold) {
    MatchResult r;
    r.input = std::string(name);
    const std::string norm = normalize_name(name);
    const std::string* best_id = nullptr;
    const std::string* best_alias = nullptr;
    std::string best_alias_norm;
    double best = -1.0;
    // concepts() is ordered by id, so the first strictly-better hit wins ties on id
    for (const auto& [id, c] : lexicon.concepts()) {
        for (const auto& alias : c.aliases) {
            auto alias_norm = normalize_name(alias);
            double s = similarity(norm, alias_norm);
            bool better = s > best || (s == best && best_id && *best_id == id && alias_norm < best_alias_norm);
            if (better) {
                best = s;
                best_id = &id;
                best_alias = &alias;
                best_alias_norm = std::move(alias_norm);
            }
        }
    }
    if (!best_id) return r;
    r.score = best;
    if (best >= threshold) {
        r.concept_id = *best_id;
        r.matched_alias = *best_alias;
    }
    return r;
}

std::vector<NameCluster> cluster_names(const std::vector<std::string>& names, double threshold) {
    std::vector<NameCluster> clusters;
    for (const auto& name : names) {
        auto norm = normalize_name(name);
        auto it = std::find_if(clusters.begin(), clusters.end(),
                               [&](const NameCluster& c) { return similarity(c.representative, norm) >= threshold; });
        if (it == clusters.end()) clusters.push_back({norm, {name}});
        else it->members.push_back(name);
    }
    return clusters;
}

const std::vector<std::string>& card_category_ids() {
    static const std::vector<std::string> ids = {
        "model_architecture", "compute_requirements", "evaluation_metrics", "license",
        "intended_use",       "training_data",        "limitations",        "bias_fairness",
        "safety_evaluation",  "out_of_scope_use",     "interpretability"};
    return ids;
}

namespace {

std::map<std::string, Concept> heading_concepts() {
    return {
        // recurring model-card categories
        {"model_architecture", {"Model Architecture", {"model architecture", "architecture", "model structure",
                                                       "network architecture", "architecture details",
                                                       "model specifications", "technical specifications"}}},
        {"compute_requirements", {"Compute Requirements", {"compute requirements", "compute infrastructure",
                                                           "hardware requirements", "hardware", "compute",
                                                           "system requirements", "infrastructure"}}},
        {"evaluation_metrics", {"Evaluation Metrics", {"evaluation", "evaluation metrics", "evaluation results",
                                                       "results", "benchmarks", "performance", "metrics",
                                                       "benchmark results"}}},
        {"license", {"License", {"license", "licensing", "license information", "model license", "terms of use"}}},
        {"intended_use", {"Intended Use", {"intended use", "intended uses", "intended uses and limitations",
                                           "direct use", "downstream use", "use cases", "uses"}}},
        {"training_data", {"Training Data", {"training data", "training", "training details", "training procedure",
                                             "training dataset", "dataset", "datasets", "pretraining data"}}},
        {"limitations", {"Limitations", {"limitations", "known limitations", "bias risks and limitations",
                                         "risks and limitations", "caveats", "recommendations"}}},
        {"bias_fairness", {"Bias and Fairness", {"bias", "fairness", "bias and fairness", "biases",
                                                 "ethical considerations", "ethics"}}},
        {"safety_evaluation", {"Safety Evaluation", {"safety", "safety evaluation", "safety evaluations",
                                                     "responsible ai", "red teaming", "safety and alignment"}}},
        {"out_of_scope_use", {"Out-of-Scope Use", {"out of scope use", "out of scope uses", "misuse",
                                                   "prohibited uses", "misuse and out of scope use"}}},
        {"interpretability", {"Interpretability", {"interpretability", "explainability", "model interpretability",
                                                   "interpretability and explainability"}}},
        // further heading concepts seen in naming-variation analysis (implementer-extended)
        {"usage", {"Usage", {"usage", "how to use", "quickstart", "quick start", "getting started",
                             "example usage", "inference", "how to get started with the model"}}},
        {"citation", {"Citation", {"citation", "bibtex", "cite", "citation information", "references"}}},
        {"model_description", {"Model Description", {"model description", "model details", "overview",
                                                     "model summary", "introduction", "about"}}},
        {"environmental_impact", {"Environmental Impact", {"environmental impact", "carbon emissions",
                                                           "co2 emissions"}}},
        {"contact", {"Contact", {"contact", "model card contact", "authors", "model card authors"}}},
    };
}

ConceptLexicon build_builtin_lexicon() {
    auto concepts = heading_concepts();

    std::set<std::string> claimed;
    for (const auto& [id, c] : concepts)
        for (const auto& a : c.aliases) claimed.insert(normalize_name(a));

    for (const auto* sub : builtin_framework().subsections()) {
        Concept c{sub->title, {}};
        std::vector<std::string> candidates{sub->title};
        candidates.insert(candidates.end(), sub->keywords.begin(), sub->keywords.end());
        for (const auto& cand : candidates) {
            auto norm = normalize_name(cand);
            if (norm.empty() || !claimed.insert(norm).second) continue;
            c.aliases.push_back(norm);
        }
        if (c.aliases.empty()) c.aliases.push_back(normalize_name(sub->id));
        concepts.emplace(sub->id, std::move(c));
    }
    return ConceptLexicon(std::move(concepts));
}

}  // namespace

const ConceptLexicon& card_heading_lexicon() {
    static const ConceptLexicon lexicon(heading_concepts());
    return lexicon;
}

const ConceptLexicon& builtin_lexicon() {
    static const ConceptLexicon lexicon = build_builtin_lexicon();
    return lexicon;
}

}  // namespace cardaudit
