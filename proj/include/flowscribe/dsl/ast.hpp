#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace flowscribe::dsl {

/// Half-open byte range [begin, end) into the source text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const Span&) const = default;
};

enum class Severity { error, warning };

struct Diagnostic {
    Severity severity = Severity::error;
    Span span;
    std::string message;
};

bool has_errors(const std::vector<Diagnostic>& diags);

struct Value;
struct KeywordArg;

struct Symbol {
    std::string name;
};

struct List {
    std::vector<Value> items;
};

/// `(head positional... :key value ...)`
struct Form {
    std::string head;
    std::vector<Value> args;
    std::vector<KeywordArg> kwargs;

    const Value* find(std::string_view key) const;
};

struct Value {
    std::variant<double, std::string, Symbol, List, Form> data;
    Span span;

    bool is_number() const { return std::holds_alternative<double>(data); }
    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_symbol() const { return std::holds_alternative<Symbol>(data); }
    bool is_list() const { return std::holds_alternative<List>(data); }
    bool is_form() const { return std::holds_alternative<Form>(data); }

    double number() const { return std::get<double>(data); }
    const std::string& string() const { return std::get<std::string>(data); }
    const std::string& symbol() const { return std::get<Symbol>(data).name; }
    const List& list() const { return std::get<List>(data); }
    const Form& form() const { return std::get<Form>(data); }

    static Value make_number(double v, Span s = {}) { return Value{v, s}; }
    static Value make_string(std::string v, Span s = {}) { return Value{std::move(v), s}; }
    static Value make_symbol(std::string v, Span s = {}) { return Value{Symbol{std::move(v)}, s}; }
    static Value make_list(std::vector<Value> items, Span s = {}) { return Value{List{std::move(items)}, s}; }
    static Value make_form(Form f, Span s = {}) { return Value{std::move(f), s}; }
};

struct KeywordArg {
    std::string key;
    Value value;
    Span key_span;
};

/// Structural equality: compares content, ignores spans and keyword order.
bool structurally_equal(const Value& a, const Value& b);

struct TermNode {
    std::string kind;
    double weight = 1.0;
    std::vector<KeywordArg> params;  // sorted by key, excludes :weight
    Span span;

    const Value* param(std::string_view key) const;
};

struct ObjectiveSpec {
    std::string name;
    std::vector<TermNode> terms;
    std::optional<long> n_expected;
    double norm_length = 10.0;  // µm
    double tolerance = 0.05;    // scale f0 of the geometric score
    Span span;
};

bool structurally_equal(const TermNode& a, const TermNode& b);
bool structurally_equal(const ObjectiveSpec& a, const ObjectiveSpec& b);

}  // namespace flowscribe::dsl
