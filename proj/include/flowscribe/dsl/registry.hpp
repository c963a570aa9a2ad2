#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowscribe/dsl/ast.hpp"

namespace flowscribe::dsl {

enum class ParamType {
    number,       // any finite number
    positive,     // > 0
    nonnegative,  // >= 0
    count,        // integer >= 1
    boolean,      // symbol true|false
    choice,       // symbol from `choices`
    point,        // [x y]
    points,       // [[x y] ...], at least one
    indices,      // [i j ...], non-negative integers
    string,
    curve,        // curve form, see curve_schemas()
    region,       // region form, see region_schemas()
    targets,      // point list, curve form, or shape form
};

std::string_view to_string(ParamType t);

struct ParamSchema {
    std::string key;
    ParamType type = ParamType::number;
    bool required = false;
    std::vector<std::string> choices;
    std::string doc;
};

/// Schema of a nested form such as `(circle :r 20)`.
struct FormSchema {
    std::string head;
    std::string doc;
    std::vector<ParamSchema> params;
    std::size_t positional_strings = 0;  // e.g. (text "KIT" ...)
};

struct KindSchema {
    std::string kind;
    std::string doc;
    std::vector<ParamSchema> params;
};

const std::vector<KindSchema>& term_kinds();
const std::vector<FormSchema>& curve_schemas();
const std::vector<FormSchema>& shape_schemas();
const std::vector<FormSchema>& region_schemas();

const KindSchema* find_kind(std::string_view kind);

/// Validates a term's parameters against its kind schema, appending diagnostics.
void validate_term(const TermNode& term, std::vector<Diagnostic>& diags);

/// Machine-readable registry (JSON-schema fragments per term kind and nested form).
nlohmann::json registry_json();

}  // namespace flowscribe::dsl
