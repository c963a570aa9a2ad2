#include "flowscribe/dsl/ast.hpp"

#include <algorithm>

namespace flowscribe::dsl {

bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::error; });
}

const Value* Form::find(std::string_view key) const {
    for (const auto& kw : kwargs)
        if (kw.key == key) return &kw.value;
    return nullptr;
}

const Value* TermNode::param(std::string_view key) const {
    for (const auto& kw : params)
        if (kw.key == key) return &kw.value;
    return nullptr;
}

namespace {

bool kwargs_equal(const std::vector<KeywordArg>& a, const std::vector<KeywordArg>& b) {
    if (a.size() != b.size()) return false;
    for (const auto& ka : a) {
        auto it = std::find_if(b.begin(), b.end(), [&](const KeywordArg& kb) { return kb.key == ka.key; });
        if (it == b.end() || !structurally_equal(ka.value, it->value)) return false;
    }
    return true;
}

bool values_equal(const std::vector<Value>& a, const std::vector<Value>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!structurally_equal(a[i], b[i])) return false;
    return true;
}

}  // namespace

bool structurally_equal(const Value& a, const Value& b) {
    if (a.data.index() != b.data.index()) return false;
    if (a.is_number()) return a.number() == b.number();
    if (a.is_string()) return a.string() == b.string();
    if (a.is_symbol()) return a.symbol() == b.symbol();
    if (a.is_list()) return values_equal(a.list().items, b.list().items);
    const auto& fa = a.form();
    const auto& fb = b.form();
    return fa.head == fb.head && values_equal(fa.args, fb.args) && kwargs_equal(fa.kwargs, fb.kwargs);
}

bool structurally_equal(const TermNode& a, const TermNode& b) {
    return a.kind == b.kind && a.weight == b.weight && kwargs_equal(a.params, b.params);
}

bool structurally_equal(const ObjectiveSpec& a, const ObjectiveSpec& b) {
    if (a.name != b.name || a.n_expected != b.n_expected || a.norm_length != b.norm_length ||
        a.tolerance != b.tolerance || a.terms.size() != b.terms.size())
        return false;
    for (std::size_t i = 0; i < a.terms.size(); ++i)
        if (!structurally_equal(a.terms[i], b.terms[i])) return false;
    return true;
}

}  // namespace flowscribe::dsl
