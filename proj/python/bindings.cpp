#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cardaudit/cli.hpp"
#include "cardaudit/errors.hpp"
#include "cardaudit/pipeline.hpp"

namespace py = pybind11;
using namespace cardaudit;

namespace {

std::string builtin_framework_json() { return serialize_framework(builtin_framework()); }

std::vector<std::pair<std::string, std::string>> validate_framework_json(const std::string& document) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& v : validate_framework(framework_from_json(nlohmann::json::parse(document))))
        out.emplace_back(v.path, v.message);
    return out;
}

py::dict card_to_dict(const ModelCardDocument& d) {
    py::list sections;
    for (const auto& s : d.sections) {
        py::dict e;
        e["heading"] = s.heading_text;
        e["depth"] = s.depth;
        e["body"] = s.body_text;
        e["char_count"] = s.char_count;
        sections.append(e);
    }
    py::list warnings;
    for (const auto& w : d.warnings) warnings.append(py::make_tuple(w.line, w.message));
    py::dict out;
    out["metadata"] = d.metadata;
    out["sections"] = sections;
    out["warnings"] = warnings;
    out["reconstructed"] = d.reconstruct();
    return out;
}

py::tuple canonicalize_heading(const std::string& name, double threshold) {
    auto m = canonicalize(name, card_heading_lexicon(), threshold);
    return py::make_tuple(m.concept_id, m.score);
}

std::string score_json(const std::string& model_id, const std::string& backend, const std::string& agents,
                       const std::string& provider, const std::string& out_root, bool use_cache) {
    RunConfig config;
    config.backend = backend;
    config.agents = agents;
    config.out_root = out_root;
    config.use_cache = use_cache;
    ModelIdentity model{model_id, model_id, provider, std::nullopt};
    TransparencyReport report;
    {
        py::gil_scoped_release release;
        Pipeline pipeline(config);
        report = pipeline.score(model);
    }
    return to_json(report).dump();
}

std::string diff_json(const std::string& older, const std::string& newer) {
    auto a = report_from_json(nlohmann::json::parse(older));
    auto b = report_from_json(nlohmann::json::parse(newer));
    return to_json(diff_reports(a, b)).dump();
}

std::string aggregate_json(const std::map<std::string, std::string>& labels, const std::string& model_id,
                           const std::string& provider) {
    std::map<std::string, ConsensusResult> results;
    for (const auto& [id, label] : labels) {
        ConsensusResult c;
        c.subsection_id = id;
        c.label = parse_label(label);
        c.unanimous = true;
        results[id] = c;
    }
    return to_json(aggregate(results, builtin_framework(), {model_id, model_id, provider, std::nullopt})).dump();
}

py::tuple cli(const std::vector<std::string>& args) {
    std::vector<std::string> full{"cardaudit"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int rc;
    {
        py::gil_scoped_release release;
        rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(rc, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Model documentation transparency auditing";

    auto base = py::register_exception<Error>(m, "CardAuditError");
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<ContractError>(m, "ContractError", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<RetrievalError>(m, "RetrievalError", base);
    py::register_exception<StorageError>(m, "StorageError", base);

    m.def("builtin_framework_json", &builtin_framework_json);
    m.def("validate_framework_json", &validate_framework_json, py::arg("document"));
    m.def("parse_card", [](const std::string& text) { return card_to_dict(parse_card(text)); }, py::arg("text"));
    m.def("normalize_name", [](const std::string& s) { return normalize_name(s); }, py::arg("name"));
    m.def("similarity", [](const std::string& a, const std::string& b) { return similarity(a, b); }, py::arg("a"),
          py::arg("b"));
    m.def("canonicalize_heading", &canonicalize_heading, py::arg("name"), py::arg("threshold") = kDefaultMatchThreshold);
    m.def("aggregate_json", &aggregate_json, py::arg("labels"), py::arg("model_id"), py::arg("provider") = "");
    m.def("score_json", &score_json, py::arg("model_id"), py::arg("backend"),
          py::arg("agents") = "heuristic,heuristic,heuristic", py::arg("provider") = "", py::arg("out_root") = "out",
          py::arg("use_cache") = true);
    m.def("diff_json", &diff_json, py::arg("older"), py::arg("newer"));
    m.def("cli", &cli, py::arg("args"));
}
