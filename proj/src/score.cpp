#include "cardaudit/score.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "cardaudit/errors.hpp"

namespace cardaudit {

using nlohmann::json;

const SubsectionScore* TransparencyReport::find(std::string_view subsection_id) const {
    for (const auto& s : subsection_scores)
        if (s.subsection_id == subsection_id) return &s;
    return nullptr;
}

std::size_t TransparencyReport::unscorable_count() const {
    return static_cast<std::size_t>(std::count_if(subsection_scores.begin(), subsection_scores.end(),
                                                  [](const auto& s) { return s.unscorable; }));
}

std::size_t TransparencyReport::tie_broken_count() const {
    return static_cast<std::size_t>(std::count_if(subsection_scores.begin(), subsection_scores.end(),
                                                  [](const auto& s) { return s.tie_broken; }));
}

Credit credit_of(Label label, const CreditPolicy& policy) { return policy.credit_of(label); }

TransparencyReport aggregate(const std::map<std::string, ConsensusResult>& labels, const Framework& framework,
                             const ModelIdentity& model, const std::map<std::string, EvidenceBundle>* evidence) {
    TransparencyReport r;
    r.model = model;
    r.framework_version = framework.version;
    r.credits = framework.credits;
    r.created_at = now_utc();

    for (const auto& section : framework.sections) {
        SectionTotal st{section.id, section.title, section.weight, {}};
        for (const auto& sub : section.subsections) {
            auto it = labels.find(sub.id);
            if (it == labels.end())
                throw ContractError("no consensus result or unscorable marker for subsection \"" + sub.id + "\"");
            const ConsensusResult& c = it->second;

            SubsectionScore s;
            s.subsection_id = sub.id;
            s.section_id = section.id;
            s.weight = sub.weight;
            s.unscorable = c.unscorable;
            s.label = c.unscorable ? Label::Absent : c.label;
            s.credit = framework.credits.credit_of(s.label);
            s.points_earned = Points::earned(sub.weight, s.credit);
            s.points_lost = Points::of(sub.weight) - s.points_earned;
            s.note = c.note;
            s.unanimous = c.unanimous;
            s.tie_broken = c.tie_broken;
            s.verdicts = c.verdicts;
            if (evidence) {
                if (auto e = evidence->find(sub.id); e != evidence->end())
                    for (const auto& chunk : e->second.chunks)
                        s.evidence.push_back({chunk.rank, chunk.source_url, chunk.title, chunk.retrieved_at});
            }
            st.points += s.points_earned;
            r.subsection_scores.push_back(std::move(s));
        }
        r.total += st.points;
        r.section_totals.push_back(std::move(st));
    }
    return r;
}

std::map<std::string, Points> point_loss_by_subsection(const std::vector<TransparencyReport>& reports) {
    std::map<std::string, Points> out;
    if (reports.empty()) return out;
    const auto& version = reports.front().framework_version;
    for (const auto& r : reports) {
        if (r.framework_version != version)
            throw ContractError("reports mix framework versions " + version + " and " + r.framework_version);
        for (const auto& s : r.subsection_scores) out[s.subsection_id] += s.points_lost;
    }
    return out;
}

std::map<std::string, Points> provider_compliance(const std::vector<TransparencyReport>& reports,
                                                  ProviderAggregation mode) {
    struct Acc {
        std::int64_t sum = 0;
        std::int64_t n = 0;
        Points best;
    };
    std::map<std::string, Acc> acc;
    for (const auto& r : reports) {
        auto& a = acc[r.model.provider];
        if (a.n == 0 || r.total > a.best) a.best = r.total;
        a.sum += r.total.units();
        ++a.n;
    }
    std::map<std::string, Points> out;
    constexpr std::int64_t step = Points::kUnitsPerPoint / 10;
    for (const auto& [provider, a] : acc) {
        if (mode == ProviderAggregation::Best) {
            out[provider] = a.best.rounded_1dp();
            continue;
        }
        // round(sum / n) to a multiple of `step`, half away from zero
        const std::int64_t denom = a.n * step;
        const std::int64_t mag = a.sum < 0 ? -a.sum : a.sum;
        std::int64_t q = (2 * mag + denom) / (2 * denom);
        out[provider] = Points::from_units((a.sum < 0 ? -q : q) * step);
    }
    return out;
}

std::map<std::string, PresenceStats> presence_stats(const JudgmentMatrix& judgments) {
    std::set<std::string> models, concepts;
    for (const auto& [key, label] : judgments) {
        models.insert(key.first);
        concepts.insert(key.second);
    }
    std::map<std::string, PresenceStats> out;
    for (const auto& concept_id : concepts) {
        PresenceStats p;
        p.models = models.size();
        for (const auto& m : models) {
            auto it = judgments.find({m, concept_id});
            Label l = it == judgments.end() ? Label::Absent : it->second;
            if (l == Label::Detailed) ++p.detailed;
            else if (l == Label::Mentioned) ++p.mentioned;
            else ++p.absent;
        }
        out.emplace(concept_id, p);
    }
    return out;
}

FleetAnalytics fleet_analytics(const std::vector<TransparencyReport>& reports, ProviderAggregation mode) {
    FleetAnalytics f;
    JudgmentMatrix m;
    for (const auto& r : reports)
        for (const auto& s : r.subsection_scores) m[{r.model.model_id, s.subsection_id}] = s.label;
    f.presence = presence_stats(m);
    f.point_loss = point_loss_by_subsection(reports);
    f.provider_compliance = provider_compliance(reports, mode);
    return f;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    return out + "\"";
}

namespace {
std::string format_rate(const PresenceStats& p) {
    // exact to four decimals via integer arithmetic
    if (p.models == 0) return "0.0000";
    auto scaled = static_cast<long long>((p.present() * 20000 + p.models) / (2 * p.models));
    std::ostringstream ss;
    ss << scaled / 10000 << "." << std::to_string(10000 + scaled % 10000).substr(1);
    return ss.str();
}
}  // namespace

std::string presence_csv(const std::map<std::string, PresenceStats>& presence, const std::vector<std::string>& order) {
    std::ostringstream out;
    out << "concept,models,present,presence_rate,detailed,mentioned,absent\n";
    std::vector<std::string> keys;
    for (const auto& k : order)
        if (presence.count(k)) keys.push_back(k);
    for (const auto& [k, v] : presence)
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    for (const auto& k : keys) {
        const auto& p = presence.at(k);
        out << csv_escape(k) << "," << p.models << "," << p.present() << "," << format_rate(p) << "," << p.detailed
            << "," << p.mentioned << "," << p.absent << "\n";
    }
    return out.str();
}

std::string point_loss_csv(const std::map<std::string, Points>& loss, const Framework& framework) {
    std::ostringstream out;
    out << "subsection_id,section_id,title,weight,points_lost\n";
    std::set<std::string> written;
    for (const auto& section : framework.sections)
        for (const auto& sub : section.subsections) {
            auto it = loss.find(sub.id);
            if (it == loss.end()) continue;
            out << csv_escape(sub.id) << "," << csv_escape(section.id) << "," << csv_escape(sub.title) << ","
                << sub.weight.to_string() << "," << it->second.to_string() << "\n";
            written.insert(sub.id);
        }
    for (const auto& [id, pts] : loss)
        if (!written.count(id)) out << csv_escape(id) << ",,,," << pts.to_string() << "\n";
    return out.str();
}

std::string provider_compliance_csv(const std::map<std::string, Points>& compliance,
                                    const std::vector<TransparencyReport>& reports) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : reports) ++counts[r.model.provider];
    std::ostringstream out;
    out << "provider,models,score\n";
    for (const auto& [provider, pts] : compliance)
        out << csv_escape(provider) << "," << counts[provider] << "," << pts.to_string_1dp() << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const TransparencyReport& r) {
    json subs = json::array();
    for (const auto& s : r.subsection_scores) {
        json verdicts = json::array();
        for (const auto& v : s.verdicts) verdicts.push_back(to_json(v));
        json evidence = json::array();
        for (const auto& e : s.evidence)
            evidence.push_back({{"rank", e.rank},
                                {"source_url", e.source_url},
                                {"title", e.title},
                                {"retrieved_at", format_rfc3339(e.retrieved_at)}});
        subs.push_back({{"subsection_id", s.subsection_id},
                        {"section_id", s.section_id},
                        {"weight", s.weight.to_string()},
                        {"label", to_string(s.label)},
                        {"credit", s.credit.to_string()},
                        {"points_earned", s.points_earned.to_string()},
                        {"points_lost", s.points_lost.to_string()},
                        {"unscorable", s.unscorable},
                        {"note", s.note},
                        {"consensus", {{"unanimous", s.unanimous}, {"tie_broken", s.tie_broken}, {"verdicts", verdicts}}},
                        {"evidence", evidence}});
    }
    json sections = json::array();
    for (const auto& st : r.section_totals)
        sections.push_back({{"section_id", st.section_id},
                            {"title", st.title},
                            {"weight", st.weight.to_string()},
                            {"points", st.points.to_string()}});
    json unscorable = json::array();
    for (const auto& s : r.subsection_scores)
        if (s.unscorable) unscorable.push_back(s.subsection_id);

    return {{"schema_version", r.schema_version},
            {"model", to_json(r.model)},
            {"framework_version", r.framework_version},
            {"credits", {{"detailed", r.credits.detailed.to_string()},
                         {"mentioned", r.credits.mentioned.to_string()},
                         {"absent", r.credits.absent.to_string()}}},
            {"created_at", format_rfc3339(r.created_at)},
            {"run_manifest_ref", r.run_manifest_ref},
            {"total", r.total.to_string()},
            {"section_totals", sections},
            {"subsections", subs},
            {"unscorable", unscorable}};
}

TransparencyReport report_from_json(const json& j) {
    try {
        TransparencyReport r;
        r.schema_version = j.at("schema_version").get<std::string>();
        r.model = model_identity_from_json(j.at("model"));
        r.framework_version = j.at("framework_version").get<std::string>();
        const auto& c = j.at("credits");
        r.credits.detailed = Credit::parse(c.at("detailed").get<std::string>());
        r.credits.mentioned = Credit::parse(c.at("mentioned").get<std::string>());
        r.credits.absent = Credit::parse(c.at("absent").get<std::string>());
        r.created_at = parse_rfc3339(j.at("created_at").get<std::string>());
        r.run_manifest_ref = j.at("run_manifest_ref").get<std::string>();
        r.total = Points::parse(j.at("total").get<std::string>());
        for (const auto& st : j.at("section_totals"))
            r.section_totals.push_back({st.at("section_id").get<std::string>(), st.at("title").get<std::string>(),
                                        Weight::parse(st.at("weight").get<std::string>()),
                                        Points::parse(st.at("points").get<std::string>())});
        for (const auto& js : j.at("subsections")) {
            SubsectionScore s;
            s.subsection_id = js.at("subsection_id").get<std::string>();
            s.section_id = js.at("section_id").get<std::string>();
            s.weight = Weight::parse(js.at("weight").get<std::string>());
            s.label = parse_label(js.at("label").get<std::string>());
            s.credit = Credit::parse(js.at("credit").get<std::string>());
            s.points_earned = Points::parse(js.at("points_earned").get<std::string>());
            s.points_lost = Points::parse(js.at("points_lost").get<std::string>());
            s.unscorable = js.at("unscorable").get<bool>();
            s.note = js.value("note", "");
            const auto& cons = js.at("consensus");
            s.unanimous = cons.at("unanimous").get<bool>();
            s.tie_broken = cons.at("tie_broken").get<bool>();
            for (const auto& v : cons.at("verdicts")) s.verdicts.push_back(verdict_from_json(v));
            for (const auto& e : js.at("evidence"))
                s.evidence.push_back({e.at("rank").get<int>(), e.at("source_url").get<std::string>(),
                                      e.at("title").get<std::string>(),
                                      parse_rfc3339(e.at("retrieved_at").get<std::string>())});
            r.subsection_scores.push_back(std::move(s));
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

std::string render_summary(const TransparencyReport& r) {
    std::ostringstream out;
    out << r.model.display_name << " (" << r.model.model_id << ")";
    if (!r.model.provider.empty()) out << " by " << r.model.provider;
    out << "\n  transparency score: " << r.total.to_string_1dp() << " / 100.0\n";
    for (const auto& st : r.section_totals)
        out << "  " << st.title << ": " << st.points.to_string_1dp() << " / " << st.weight.to_string() << "\n";
    out << "  tie-broken subsections: " << r.tie_broken_count() << "\n";
    out << "  unscorable subsections: " << r.unscorable_count() << "\n";
    return out.str();
}

}  // namespace cardaudit
