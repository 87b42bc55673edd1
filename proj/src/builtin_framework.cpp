#include <initializer_list>

#include "cardaudit/schema.hpp"

namespace cardaudit {
namespace {

struct SubsectionRow {
    const char* slug;
    const char* title;
    int weight_tenths;
    const char* detailed;   // what a Detailed disclosure contains
    const char* mentioned;  // what a Mentioned-only disclosure looks like
    std::initializer_list<const char*> keywords;
};

struct SectionRow {
    const char* id;
    const char* title;
    int weight_tenths;
    std::initializer_list<SubsectionRow> rows;
};

std::string criteria(const SubsectionRow& row) {
    return std::string("Field: ") + row.title +
           ".\nDetailed: substantive, specific, actionable information: " + row.detailed +
           ".\nMentioned: the field is addressed only superficially or vaguely, e.g. " + row.mentioned +
           ".\nAbsent: no relevant information in the evidence.";
}

// clang-format off
const std::initializer_list<SectionRow> kTable = {
    {"model_details", "Model Details", 150, {
        {"model_overview", "Model overview", 30,
         "a description of what the model is, its modality and its capabilities with concrete specifics",
         "a one-line tagline", {"model overview", "model description", "overview", "capabilities"}},
        {"organization", "Organization developing the model", 10,
         "the developing organization named, with team or contact details",
         "a logo or brand name only", {"developed by", "developer", "organization", "company"}},
        {"model_version", "Model Version", 20,
         "an explicit version identifier and what distinguishes it", "a vague reference to the latest version",
         {"model version", "version", "checkpoint", "revision"}},
        {"release_date", "Model Release Date", 5,
         "an exact release date", "a relative time such as recently released",
         {"release date", "released", "launch date", "release"}},
        {"version_progression", "Model Version Progression", 10,
         "a changelog comparing this version with predecessors", "a note that earlier versions exist",
         {"changelog", "previous version", "version history", "predecessor", "successor"}},
        {"model_architecture", "Model Architecture", 40,
         "architecture type, parameter count, layers, context length or other numeric specifics",
         "the word transformer with no further detail",
         {"architecture", "parameters", "transformer", "mixture-of-experts", "layers"}},
        {"model_dependencies", "Model Dependencies", 10,
         "base models, upstream components or required external systems named explicitly",
         "a statement that it builds on prior work", {"dependencies", "base model", "fine-tuned from", "built on"}},
        {"paper_and_links", "Paper and relevant links", 5,
         "links to a paper, technical report or repository", "a reference to a paper without a link",
         {"paper", "technical report", "arxiv", "repository", "citation"}},
        {"distribution_forms", "Model Distribution Forms", 20,
         "the distribution channels: API, weights download, quantized variants, licensing terms",
         "a statement that the model is available", {"distribution", "api", "weights", "download", "license"}},
    }},
    {"inputs_outputs", "Model Inputs & Outputs", 60, {
        {"inputs", "Inputs", 20, "accepted input modalities and formats with limits",
         "a statement that the model accepts text", {"input", "inputs", "modalities", "prompt format"}},
        {"outputs", "Outputs", 20, "output modalities and formats with limits",
         "a statement that the model generates text", {"output", "outputs", "generates", "response format"}},
        {"token_count", "Token Count", 20, "context window and output token limits as numbers",
         "a claim of a long context", {"context window", "context length", "tokens", "token limit"}},
    }},
    {"model_data", "Model Data", 150, {
        {"training_dataset", "Training Dataset", 70,
         "named data sources, sizes, date cutoffs and composition", "a mention of publicly available data",
         {"training data", "dataset", "pretraining data", "corpus", "data sources"}},
        {"training_data_processing", "Training Data Processing", 60,
         "filtering, deduplication, decontamination or labeling procedures described concretely",
         "a statement that data was cleaned", {"data processing", "filtering", "deduplication", "preprocessing", "data cleaning"}},
        {"knowledge_count", "Knowledge Count", 20, "a knowledge cutoff date and coverage statement",
         "a vague note on recency", {"knowledge cutoff", "cutoff", "knowledge"}},
    }},
    {"implementation_sustainability", "Model Implementation and Sustainability", 50, {
        {"hardware", "Hardware Used During Training & Inference", 20,
         "accelerator types, counts and hours for training and inference", "a mention of GPUs",
         {"hardware", "gpu", "tpu", "accelerator", "compute"}},
        {"software_frameworks", "Software Frameworks & Tooling", 20,
         "named frameworks, libraries and versions", "a mention of open-source tools",
         {"software", "framework", "jax", "pytorch", "tooling"}},
        {"energy_use", "Energy Use / Sustainability Metrics", 10,
         "energy consumption or emissions figures", "a statement about efficiency",
         {"energy", "carbon", "emissions", "sustainability", "co2"}},
    }},
    {"intended_use", "Intended Use", 100, {
        {"primary_uses", "Primary intended uses", 50, "concrete intended use cases and tasks",
         "a generic statement such as general purpose assistant", {"intended use", "use cases", "intended for", "usage"}},
        {"primary_users", "Primary intended users", 20, "the target user groups and deployment contexts",
         "a generic mention of developers", {"intended users", "target users", "audience", "users"}},
        {"out_of_scope", "Out-of-scope use cases", 30, "explicit prohibited or unsupported uses",
         "a generic warning against misuse", {"out-of-scope", "out of scope", "prohibited", "not intended", "misuse"}},
    }},
    {"critical_risk", "Critical Risk", 200, {
        {"cbrn", "CBRN (Chemical, Biological, Radiological or Nuclear)", 50,
         "CBRN uplift evaluations with methods, thresholds and results",
         "a statement that CBRN risks were considered", {"cbrn", "biological", "chemical", "nuclear", "radiological", "bioweapon"}},
        {"cyber_risk", "Cyber Risk", 50, "offensive cyber capability evaluations with results",
         "a statement that cyber misuse is possible", {"cyber", "cybersecurity", "hacking", "exploit", "capture the flag"}},
        {"harmful_manipulation", "Harmful Manipulation", 40,
         "persuasion or manipulation evaluations with results", "a note that manipulation is a risk",
         {"manipulation", "persuasion", "influence operations"}},
        {"child_safety", "Child Safety Evaluations", 40, "child safety evaluations with methodology and results",
         "a policy statement against child abuse content", {"child safety", "csam", "minors", "child"}},
        {"privacy_risks", "Privacy Risks", 20, "privacy evaluations such as PII leakage or memorization tests",
         "a generic privacy statement", {"privacy", "personal data", "pii", "memorization"}},
    }},
    {"safety_evaluation", "Safety Evaluation", 250, {
        {"refusals", "Refusals", 10, "refusal and over-refusal rates on named evaluations",
         "a statement that the model refuses harmful requests", {"refusal", "refuse", "over-refusal"}},
        {"disallowed_content", "Disallowed Content Handling", 40,
         "disallowed content categories with evaluation results", "a reference to a content policy",
         {"disallowed content", "harmful content", "content policy", "unsafe content"}},
        {"sycophancy", "Sycophancy", 20, "sycophancy evaluations with results", "a note that sycophancy was reduced",
         {"sycophancy", "sycophantic"}},
        {"jailbreak", "Jailbreak", 40, "jailbreak resistance evaluations with attack types and success rates",
         "a claim of robustness to jailbreaks", {"jailbreak", "jailbreaks", "prompt injection"}},
        {"hallucinations", "Hallucinations", 40, "hallucination or factuality evaluations with rates",
         "a warning that the model may hallucinate", {"hallucination", "hallucinations", "factuality", "factual accuracy"}},
        {"deception_behaviors", "Deception Behaviors", 40, "deception or scheming evaluations with results",
         "a statement that deception was studied", {"deception", "deceptive", "scheming", "sandbagging"}},
        {"fairness_bias", "Fairness & Bias Evaluations (incl. BBQ)", 30,
         "bias evaluations on named benchmarks (BBQ is the commonly cited example; required coverage is not defined) with scores",
         "a generic statement that the model may reflect biases", {"bias", "fairness", "bbq", "stereotype"}},
        {"adversarial_robustness", "Adversarial Robustness", 20,
         "adversarial testing methods and robustness results", "a claim of robustness",
         {"adversarial", "robustness", "adversarial attacks"}},
        {"red_teaming", "Red Teaming Results", 10, "red teaming scope, participants and findings",
         "a statement that red teaming occurred", {"red team", "red teaming", "red-teaming"}},
    }},
    {"risk_mitigations", "Risk Mitigations", 40, {
        {"risk_mitigation", "Risk Mitigation", 40, "specific safeguards, filters and monitoring with their effect",
         "a generic commitment to safety", {"mitigation", "safeguards", "mitigations", "safety measures"}},
    }},
};
// clang-format on

Framework build() {
    Framework f;
    f.version = "1.0.0";
    for (const auto& srow : kTable) {
        Section s;
        s.id = srow.id;
        s.title = srow.title;
        s.weight = Weight::from_tenths(srow.weight_tenths);
        for (const auto& row : srow.rows) {
            Subsection sub;
            sub.id = std::string(srow.id) + "." + row.slug;
            sub.title = row.title;
            sub.weight = Weight::from_tenths(row.weight_tenths);
            sub.criteria_prompt = criteria(row);
            for (const char* k : row.keywords) sub.keywords.emplace_back(k);
            s.subsections.push_back(std::move(sub));
        }
        f.sections.push_back(std::move(s));
    }
    return f;
}

}  // namespace

const Framework& builtin_framework() {
    static const Framework framework = build();
    return framework;
}

}  // namespace cardaudit
