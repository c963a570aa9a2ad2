#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowscribe/agent/catalogue.hpp"
#include "flowscribe/agent/client.hpp"
#include "flowscribe/agent/prompt.hpp"
#include "flowscribe/dsl/ast.hpp"
#include "flowscribe/terms/objective.hpp"

namespace flowscribe::agent {

struct Provenance {
    std::string model_id;
    std::string bundle_hash;
    std::string template_version;
    std::string spec_hash;  // sha256 of the canonical spec text
    int repair_rounds = 0;
};

nlohmann::json to_json(const Provenance& p);

enum class SynthesisFailure { none, transport, extraction, parse };
std::string to_string(SynthesisFailure f);

struct SynthesisResult {
    SynthesisFailure failure = SynthesisFailure::none;
    std::optional<dsl::ObjectiveSpec> spec;
    std::string spec_text;  // canonical
    Provenance provenance;
    PromptBundle bundle;
    std::vector<std::string> transcripts;
    std::vector<dsl::Diagnostic> diagnostics;  // of the last failed attempt
    std::string error;
    /// Entry recorded in the catalogue: an unrated DO on success, a DONT after repeated failure.
    std::optional<std::string> entry_id;

    bool ok() const { return failure == SynthesisFailure::none; }
};

struct SynthesisOptions {
    std::size_t budget = kDefaultBudget;
    int max_attempts = 2;  // first answer plus one repair round
};

/// compose -> call -> extract -> parse and compile; on failure one repair round with the diagnostics
/// appended to the conversation. `record` (optional) receives the resulting catalogue entry.
SynthesisResult synthesize(const std::string& request, const std::vector<CatalogueEntry>& examples, LLMClient& client,
                           Catalogue* record, const SynthesisOptions& opt = {});
SynthesisResult synthesize(const std::string& request, Catalogue& catalogue, LLMClient& client,
                           const SynthesisOptions& opt = {});

/// S = exp(-f / f0), f0 the objective's tolerance scale.
double score_geometric(const ParticleConfig& a, const terms::CompiledObjective& obj);

struct EvaluationRow {
    std::size_t examples = 0;  // catalogue budget
    std::size_t attempts = 0;
    std::size_t successes = 0;
    double mean_score = 0.0;
    double success_rate() const { return attempts ? static_cast<double>(successes) / static_cast<double>(attempts) : 0.0; }
};

/// Success rate per example budget: each request is synthesized without recording; a success is a
/// parsed spec whose score (from `scorer`) reaches `threshold`.
std::vector<EvaluationRow> evaluate_catalogue(const std::vector<std::string>& requests,
                                              const std::vector<CatalogueEntry>& catalogue, LLMClient& client,
                                              const std::vector<std::size_t>& budgets,
                                              const std::function<double(const dsl::ObjectiveSpec&)>& scorer,
                                              double threshold);

}  // namespace flowscribe::agent
