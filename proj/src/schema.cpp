#include "cardaudit/schema.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "cardaudit/errors.hpp"
#include "cardaudit/text.hpp"

namespace cardaudit {

using nlohmann::json;

std::string_view to_string(Label label) {
    switch (label) {
        case Label::Absent: return "Absent";
        case Label::Mentioned: return "Mentioned";
        case Label::Detailed: return "Detailed";
    }
    return "Absent";
}

Label parse_label(std::string_view text) {
    std::string s = text::to_lower(text::trim(text));
    if (s == "absent") return Label::Absent;
    if (s == "mentioned" || s == "mentioned only") return Label::Mentioned;
    if (s == "detailed") return Label::Detailed;
    throw ParseError("unknown completeness label \"" + std::string(text) + "\"");
}

Credit CreditPolicy::credit_of(Label label) const {
    switch (label) {
        case Label::Detailed: return detailed;
        case Label::Mentioned: return mentioned;
        case Label::Absent: return absent;
    }
    return absent;
}

std::size_t Framework::subsection_count() const {
    std::size_t n = 0;
    for (const auto& s : sections) n += s.subsections.size();
    return n;
}

const Subsection* Framework::find_subsection(std::string_view id) const {
    for (const auto& s : sections)
        for (const auto& sub : s.subsections)
            if (sub.id == id) return &sub;
    return nullptr;
}

const Section* Framework::section_of(std::string_view subsection_id) const {
    for (const auto& s : sections)
        for (const auto& sub : s.subsections)
            if (sub.id == subsection_id) return &s;
    return nullptr;
}

std::vector<const Subsection*> Framework::subsections() const {
    std::vector<const Subsection*> out;
    out.reserve(subsection_count());
    for (const auto& s : sections)
        for (const auto& sub : s.subsections) out.push_back(&sub);
    return out;
}

std::vector<Violation> validate_framework(const Framework& f) {
    std::vector<Violation> out;
    auto add = [&](std::string path, std::string msg) { out.push_back({std::move(path), std::move(msg)}); };

    static const std::regex semver(R"(^\d+\.\d+\.\d+([-+][0-9A-Za-z.+-]*)?$)");
    if (!std::regex_match(f.version, semver))
        add("version", "version \"" + f.version + "\" is not a semantic version");
    if (f.sections.empty()) add("sections", "framework has no sections");

    const auto& c = f.credits;
    if (!(c.absent <= c.mentioned && c.mentioned <= c.detailed))
        add("credits", "credits must satisfy absent <= mentioned <= detailed");

    std::set<std::string> section_ids;
    std::set<std::string> subsection_ids;
    Weight total;
    for (std::size_t i = 0; i < f.sections.size(); ++i) {
        const auto& s = f.sections[i];
        const std::string spath = "sections[" + std::to_string(i) + "]";
        if (s.id.empty()) add(spath + ".id", "empty section id");
        else if (!section_ids.insert(s.id).second) add(spath + ".id", "duplicate id \"" + s.id + "\"");
        if (s.weight <= Weight{})
            add(spath + ".weight", "section \"" + s.id + "\" weight " + s.weight.to_string() + " must be > 0");
        if (s.subsections.empty()) add(spath + ".subsections", "section \"" + s.id + "\" has no subsections");
        total += s.weight;

        Weight sub_total;
        for (std::size_t k = 0; k < s.subsections.size(); ++k) {
            const auto& sub = s.subsections[k];
            const std::string kpath = spath + ".subsections[" + std::to_string(k) + "]";
            if (sub.id.empty()) add(kpath + ".id", "empty subsection id");
            else if (!subsection_ids.insert(sub.id).second) add(kpath + ".id", "duplicate id \"" + sub.id + "\"");
            if (sub.weight <= Weight{})
                add(kpath + ".weight", "subsection \"" + sub.id + "\" weight " + sub.weight.to_string() + " must be > 0");
            sub_total += sub.weight;
        }
        if (!s.subsections.empty() && sub_total != s.weight)
            add(spath + ".subsections", "section \"" + s.id + "\" subsection weights sum to " + sub_total.to_string() +
                                            ", expected " + s.weight.to_string());
    }
    if (total != Weight::from_tenths(1000))
        add("sections", "section weights sum to " + total.to_string() + ", expected 100.0");
    return out;
}

namespace {

const std::set<std::string> kFrameworkKeys = {"version", "sections", "credits"};
const std::set<std::string> kSectionKeys = {"id", "title", "weight", "subsections"};
const std::set<std::string> kSubsectionKeys = {"id", "title", "weight", "criteria_prompt", "keywords"};
const std::set<std::string> kCreditKeys = {"detailed", "mentioned", "absent"};

json extras_of(const json& j, const std::set<std::string>& known) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) out[it.key()] = it.value();
    return out;
}

void merge_extras(json& j, const json& extras) {
    for (auto it = extras.begin(); it != extras.end(); ++it)
        if (!j.contains(it.key())) j[it.key()] = it.value();
}

std::string decimal_text(const json& j, const std::string& where) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number()) return j.dump();
    throw ParseError(where + ": expected a decimal string");
}

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing \"" + key + "\"");
    return j.at(key);
}

std::string require_string(const json& j, const char* key, const std::string& where) {
    const auto& v = require(j, key, where);
    if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

}  // namespace

json framework_to_json(const Framework& f) {
    json j;
    j["version"] = f.version;
    j["credits"] = {{"detailed", f.credits.detailed.to_string()},
                    {"mentioned", f.credits.mentioned.to_string()},
                    {"absent", f.credits.absent.to_string()}};
    json sections = json::array();
    for (const auto& s : f.sections) {
        json js;
        js["id"] = s.id;
        js["title"] = s.title;
        js["weight"] = s.weight.to_string();
        json subs = json::array();
        for (const auto& sub : s.subsections) {
            json jsub;
            jsub["id"] = sub.id;
            jsub["title"] = sub.title;
            jsub["weight"] = sub.weight.to_string();
            jsub["criteria_prompt"] = sub.criteria_prompt;
            jsub["keywords"] = sub.keywords;
            merge_extras(jsub, sub.extensions);
            subs.push_back(std::move(jsub));
        }
        js["subsections"] = std::move(subs);
        merge_extras(js, s.extensions);
        sections.push_back(std::move(js));
    }
    j["sections"] = std::move(sections);
    merge_extras(j, f.extensions);
    return j;
}

Framework framework_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("framework: expected a JSON object");
    Framework f;
    f.version = require_string(j, "version", "framework");
    f.extensions = extras_of(j, kFrameworkKeys);
    if (j.contains("credits")) {
        const auto& c = j.at("credits");
        if (!c.is_object()) throw ParseError("framework.credits: expected an object");
        if (c.contains("detailed")) f.credits.detailed = Credit::parse(decimal_text(c.at("detailed"), "credits.detailed"));
        if (c.contains("mentioned")) f.credits.mentioned = Credit::parse(decimal_text(c.at("mentioned"), "credits.mentioned"));
        if (c.contains("absent")) f.credits.absent = Credit::parse(decimal_text(c.at("absent"), "credits.absent"));
    }
    const auto& sections = require(j, "sections", "framework");
    if (!sections.is_array()) throw ParseError("framework.sections: expected an array");
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const auto& js = sections[i];
        const std::string where = "sections[" + std::to_string(i) + "]";
        if (!js.is_object()) throw ParseError(where + ": expected an object");
        Section s;
        s.id = require_string(js, "id", where);
        s.title = js.contains("title") && js.at("title").is_string() ? js.at("title").get<std::string>() : s.id;
        s.weight = Weight::parse(decimal_text(require(js, "weight", where), where + ".weight"));
        s.extensions = extras_of(js, kSectionKeys);
        const auto& subs = require(js, "subsections", where);
        if (!subs.is_array()) throw ParseError(where + ".subsections: expected an array");
        for (std::size_t k = 0; k < subs.size(); ++k) {
            const auto& jsub = subs[k];
            const std::string kwhere = where + ".subsections[" + std::to_string(k) + "]";
            if (!jsub.is_object()) throw ParseError(kwhere + ": expected an object");
            Subsection sub;
            sub.id = require_string(jsub, "id", kwhere);
            sub.title = jsub.contains("title") && jsub.at("title").is_string() ? jsub.at("title").get<std::string>() : sub.id;
            sub.weight = Weight::parse(decimal_text(require(jsub, "weight", kwhere), kwhere + ".weight"));
            if (jsub.contains("criteria_prompt")) {
                if (!jsub.at("criteria_prompt").is_string()) throw ParseError(kwhere + ".criteria_prompt: expected a string");
                sub.criteria_prompt = jsub.at("criteria_prompt").get<std::string>();
            }
            if (jsub.contains("keywords")) {
                const auto& kw = jsub.at("keywords");
                if (!kw.is_array()) throw ParseError(kwhere + ".keywords: expected an array");
                for (const auto& k2 : kw) {
                    if (!k2.is_string()) throw ParseError(kwhere + ".keywords: expected strings");
                    sub.keywords.push_back(k2.get<std::string>());
                }
            } else {
                sub.keywords = keywords_from_title(sub.title);
            }
            sub.extensions = extras_of(jsub, kSubsectionKeys);
            s.subsections.push_back(std::move(sub));
        }
        f.sections.push_back(std::move(s));
    }
    return f;
}

Framework load_framework(std::string_view document) {
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("framework: ") + e.what());
    }
    Framework f = framework_from_json(j);
    auto violations = validate_framework(f);
    if (!violations.empty())
        throw ValidationError(violations.front().path + ": " + violations.front().message);
    return f;
}

std::string serialize_framework(const Framework& f) { return framework_to_json(f).dump(2) + "\n"; }

std::vector<std::string> keywords_from_title(std::string_view title) {
    static const std::set<std::string> stop = {"and", "or", "the", "of", "a", "an", "to", "for", "in",
                                               "on", "by", "incl", "with", "during", "model", "use"};
    std::vector<std::string> out;
    for (const auto& tok : text::tokenize_words(text::to_lower(title))) {
        if (tok.size() < 2 || stop.count(tok)) continue;
        if (std::find(out.begin(), out.end(), tok) == out.end()) out.push_back(tok);
    }
    if (out.empty()) {
        auto all = text::to_lower(text::trim(title));
        if (!all.empty()) out.push_back(all);
    }
    return out;
}

}  // namespace cardaudit
