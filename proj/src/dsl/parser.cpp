#include <algorithm>
#include <cmath>
#include <map>

#include "flowscribe/dsl/parser.hpp"
#include "flowscribe/dsl/registry.hpp"

namespace flowscribe::dsl {

namespace {

void error(std::vector<Diagnostic>& d, Span s, std::string msg) { d.push_back({Severity::error, s, std::move(msg)}); }

bool symbol_is(const Value* v, std::string_view s) { return v && v->is_symbol() && v->symbol() == s; }

std::optional<TermNode> lower_term(const Value& v, std::vector<Diagnostic>& d) {
    if (!v.is_form() || v.form().head != "term") {
        error(d, v.span, "expected (term <kind> :key value ...)");
        return std::nullopt;
    }
    const Form& f = v.form();
    if (f.args.empty() || !f.args.front().is_symbol()) {
        error(d, v.span, "term must name its kind, e.g. (term shape.curve ...)");
        return std::nullopt;
    }
    if (f.args.size() > 1) {
        error(d, f.args[1].span, "unexpected positional argument in term");
        return std::nullopt;
    }
    TermNode t;
    t.kind = f.args.front().symbol();
    t.span = v.span;
    for (const auto& kw : f.kwargs) {
        if (kw.key == "weight") {
            if (!kw.value.is_number()) {
                error(d, kw.value.span, ":weight must be a number");
            } else if (kw.value.number() < 0) {
                error(d, kw.value.span, "weight must be ≥ 0");
            } else {
                t.weight = kw.value.number();
            }
            continue;
        }
        t.params.push_back(kw);
    }
    std::sort(t.params.begin(), t.params.end(),
              [](const KeywordArg& a, const KeywordArg& b) { return a.key < b.key; });
    validate_term(t, d);
    return t;
}

void check_subsets(const ObjectiveSpec& spec, std::vector<Diagnostic>& d) {
    std::map<long, std::pair<std::size_t, bool>> owner;  // index -> (term, shared)
    for (std::size_t ti = 0; ti < spec.terms.size(); ++ti) {
        const auto& t = spec.terms[ti];
        const Value* subset = t.param("subset");
        const bool shared = symbol_is(t.param("shared"), "true");
        if (t.kind == "shape.square") {
            if (subset && subset->list().items.size() != 4)
                error(d, subset->span, "shape.square needs exactly 4 particles in :subset");
            if (!subset && spec.n_expected && *spec.n_expected != 4)
                error(d, t.span, "shape.square without :subset requires n = 4");
        }
        if (!subset) continue;
        for (const auto& item : subset->list().items) {
            const long idx = static_cast<long>(item.number());
            if (spec.n_expected && idx >= *spec.n_expected) {
                error(d, item.span, "subset index " + std::to_string(idx) + " out of range for n = " +
                                        std::to_string(*spec.n_expected));
                continue;
            }
            auto [it, inserted] = owner.emplace(idx, std::make_pair(ti, shared));
            if (!inserted && it->second.first != ti && !(it->second.second && shared))
                error(d, item.span, "particle " + std::to_string(idx) +
                                        " appears in subsets of two terms; mark both :shared true");
        }
    }
}

}  // namespace

ParseResult parse(std::string_view source) {
    ParseResult out;
    auto read = read_sexpr(source);
    out.diagnostics = std::move(read.diagnostics);
    if (!read.value) return out;

    const Value& root = *read.value;
    auto& d = out.diagnostics;
    if (!root.is_form() || root.form().head != "objective") {
        error(d, root.span, "top-level form must be (objective ...)");
        return out;
    }
    const Form& f = root.form();
    ObjectiveSpec spec;
    spec.span = root.span;
    for (const auto& kw : f.kwargs) {
        const Value& v = kw.value;
        if (kw.key == "name") {
            if (!v.is_string()) error(d, v.span, ":name must be a string");
            else spec.name = v.string();
        } else if (kw.key == "n") {
            if (!v.is_number() || std::floor(v.number()) != v.number() || v.number() < 1 || v.number() > 1e7)
                error(d, v.span, ":n must be a positive integer");
            else spec.n_expected = static_cast<long>(v.number());
        } else if (kw.key == "norm-length") {
            if (!v.is_number() || !(v.number() > 0)) error(d, v.span, ":norm-length must be > 0");
            else spec.norm_length = v.number();
        } else if (kw.key == "tolerance") {
            if (!v.is_number() || !(v.number() > 0)) error(d, v.span, ":tolerance must be > 0");
            else spec.tolerance = v.number();
        } else {
            error(d, kw.key_span, "unknown objective option :" + kw.key);
        }
    }
    for (const auto& arg : f.args)
        if (auto t = lower_term(arg, d)) spec.terms.push_back(std::move(*t));
    if (f.args.empty()) error(d, root.span, "at least one term required");
    if (!has_errors(d)) check_subsets(spec, d);
    if (!has_errors(d)) out.spec = std::move(spec);
    return out;
}

}  // namespace flowscribe::dsl
