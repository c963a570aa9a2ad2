#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowscribe/dsl/ast.hpp"

namespace flowscribe::dsl {

struct ReadResult {
    std::optional<Value> value;
    std::vector<Diagnostic> diagnostics;
};

/// Reads exactly one s-expression from `source`. Never throws on malformed input.
ReadResult read_sexpr(std::string_view source);

struct ParseResult {
    std::optional<ObjectiveSpec> spec;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return spec.has_value(); }
};

/// Parses and validates an objective specification.
ParseResult parse(std::string_view source);

/// Deterministic text form: keys sorted, shortest round-trip floats.
std::string print_canonical(const ObjectiveSpec& spec);
std::string print_value(const Value& v);

nlohmann::json to_json(const ObjectiveSpec& spec);
nlohmann::json to_json(const Value& v);
nlohmann::json to_json(const Diagnostic& d);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

class ExtractionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Returns the body of the first ```objective-dsl fenced block, else the last fenced block.
/// Throws ExtractionError when the transcript has no fenced block.
std::string extract_fenced(std::string_view transcript);

}  // namespace flowscribe::dsl
