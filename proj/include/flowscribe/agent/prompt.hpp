#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowscribe/agent/catalogue.hpp"

namespace flowscribe::agent {

inline constexpr const char* kTemplateVersion = "flowscribe-prompt/1";
inline constexpr std::size_t kDefaultBudget = 10;
inline constexpr std::size_t kMaxDonts = 2;

struct Example {
    std::string prompt;
    std::string spec_text;
    Verdict verdict = Verdict::DO;
    std::string feedback;
};

struct PromptBundle {
    std::string template_version = kTemplateVersion;
    std::string system_message;
    std::vector<Example> examples;  // DOs first, then DONTs
    std::string request;
    std::size_t budget = kDefaultBudget;
};

/// Fixed system message: role, DSL grammar and the term registry.
const std::string& system_message();

/// Rated DOs ranked by score (unscored last; ties most recent first), then up to two DONTs, most
/// recent first. DONT slots are reserved out of the budget. Pure in its arguments.
PromptBundle compose_prompt(const std::vector<CatalogueEntry>& catalogue, const std::string& request,
                            std::size_t budget = kDefaultBudget);

nlohmann::json to_json(const PromptBundle& b);
/// Canonical serialization, the bytes the bundle hash covers.
std::string bundle_bytes(const PromptBundle& b);
std::string bundle_hash(const PromptBundle& b);

/// User message carrying the examples and the new request.
std::string render_user_message(const PromptBundle& b);

std::string sha256_hex(std::string_view data);

}  // namespace flowscribe::agent
