#include "flowscribe/dsl/registry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace flowscribe::dsl {

std::string_view to_string(ParamType t) {
    switch (t) {
        case ParamType::number: return "number";
        case ParamType::positive: return "positive";
        case ParamType::nonnegative: return "nonnegative";
        case ParamType::count: return "count";
        case ParamType::boolean: return "boolean";
        case ParamType::choice: return "choice";
        case ParamType::point: return "point";
        case ParamType::points: return "points";
        case ParamType::indices: return "indices";
        case ParamType::string: return "string";
        case ParamType::curve: return "curve";
        case ParamType::region: return "region";
        case ParamType::targets: return "targets";
    }
    return "unknown";
}

namespace {

ParamSchema req(std::string key, ParamType t, std::string doc) { return {std::move(key), t, true, {}, std::move(doc)}; }
ParamSchema opt(std::string key, ParamType t, std::string doc) { return {std::move(key), t, false, {}, std::move(doc)}; }

std::vector<ParamSchema> with_pose(std::vector<ParamSchema> p) {
    p.push_back(opt("center", ParamType::point, "translation of the shape, µm"));
    p.push_back(opt("angle", ParamType::number, "rotation, degrees"));
    return p;
}

}  // namespace

const std::vector<FormSchema>& curve_schemas() {
    static const std::vector<FormSchema> schemas = {
        {"circle", "circle of radius r", with_pose({req("r", ParamType::positive, "radius, µm")})},
        {"ellipse", "ellipse with semi-axes a (x) and b (y)",
         with_pose({req("a", ParamType::positive, "semi-axis along x, µm"),
                    req("b", ParamType::positive, "semi-axis along y, µm")})},
        {"sinusoid", "open sine wave centered on the origin along x",
         with_pose({req("amplitude", ParamType::nonnegative, "µm"), req("period", ParamType::positive, "µm"),
                    req("length", ParamType::positive, "total x extent, µm")})},
        {"spiral", "Archimedean spiral r = a + pitch * theta / 2pi",
         with_pose({req("a", ParamType::nonnegative, "start radius, µm"),
                    req("pitch", ParamType::positive, "radial growth per turn, µm"),
                    req("turns", ParamType::positive, "number of turns")})},
        {"heart", "classic heart outline, height about 2*size",
         with_pose({req("size", ParamType::positive, "scale, µm")})},
        {"polygon", "regular polygon with circumradius r",
         with_pose({req("sides", ParamType::count, "vertex count >= 3"), req("r", ParamType::positive, "µm")})},
        {"star", "star with alternating outer and inner vertices",
         with_pose({req("points", ParamType::count, "number of tips >= 3"),
                    req("r-outer", ParamType::positive, "µm"), req("r-inner", ParamType::positive, "µm")})},
        {"segment", "straight segment", {req("from", ParamType::point, "µm"), req("to", ParamType::point, "µm")}},
        {"chain", "polyline through points",
         with_pose({req("points", ParamType::points, "at least two points, µm"),
                    opt("closed", ParamType::boolean, "close the polyline (default false)")})},
    };
    return schemas;
}

const std::vector<FormSchema>& shape_schemas() {
    static const std::vector<FormSchema> schemas = {
        {"polygon", "regular polygon perimeter, balanced per-edge counts",
         with_pose({req("sides", ParamType::count, "vertex count >= 3"), req("r", ParamType::positive, "µm")})},
        {"star", "star perimeter, balanced per-edge counts",
         with_pose({req("points", ParamType::count, "tips >= 3"), req("r-outer", ParamType::positive, "µm"),
                    req("r-inner", ParamType::positive, "µm")})},
        {"pentagram", "regular five-pointed star; inner radius follows from the geometry",
         with_pose({req("r", ParamType::positive, "outer radius, µm")})},
        {"hexagon-trio", "three edge-sharing hexagons of side s, recentered at the origin",
         with_pose({req("s", ParamType::positive, "side length, µm")})},
        {"text", "stroke-font lettering: (text \"KIT\" :height 20)",
         with_pose({opt("height", ParamType::positive, "glyph height, µm (default 20)"),
                    opt("tracking", ParamType::nonnegative, "gap between glyphs as a fraction of height")}),
         1},
    };
    return schemas;
}

const std::vector<FormSchema>& region_schemas() {
    static const std::vector<FormSchema> schemas = {
        {"disk", "disk region",
         {opt("center", ParamType::point, "µm"), req("r", ParamType::positive, "µm"),
          opt("w", ParamType::positive, "soft-edge width, µm (default 1)")}},
        {"rect", "axis-aligned rectangle",
         {opt("center", ParamType::point, "µm"), req("size", ParamType::point, "width and height, µm"),
          opt("w", ParamType::positive, "soft-edge width, µm (default 1)")}},
        {"polygon-mask", "simple polygon region",
         {req("points", ParamType::points, "at least three vertices, µm"),
          opt("w", ParamType::positive, "soft-edge width, µm (default 1)")}},
    };
    return schemas;
}

const std::vector<KindSchema>& term_kinds() {
    static const std::vector<KindSchema> kinds = {
        {"shape.curve", "mean squared distance to the nearest arc-length sample of a curve",
         {req("curve", ParamType::curve, "curve form"),
          opt("samples", ParamType::count, "sample count (default 16 x particle count)"),
          opt("subset", ParamType::indices, "restrict to these particles"),
          opt("shared", ParamType::boolean, "allow the subset to overlap other terms")}},
        {"shape.points", "mean squared distance to assigned target points",
         {req("targets", ParamType::targets, "point list, shape form, or curve form"),
          {"assign", ParamType::choice, false, {"nearest", "balanced"}, "assignment mode (default balanced)"},
          opt("count", ParamType::count, "points generated from a form (default particle count)"),
          opt("subset", ParamType::indices, "restrict to these particles"),
          opt("shared", ParamType::boolean, "allow the subset to overlap other terms")}},
        {"shape.square", "relational square: equal sides, right angles, equal diagonals (4 particles)",
         {opt("subset", ParamType::indices, "the four particles (default all, requires n = 4)"),
          opt("shared", ParamType::boolean, "allow the subset to overlap other terms")}},
        {"spacing.repel", "soft barrier (1 - d/d0)^2 on nearest-neighbour distances",
         {req("d0", ParamType::positive, "barrier range, µm")}},
        {"region.density", "one minus the mean soft membership of a region",
         {req("region", ParamType::region, "region form")}},
        {"region.periphery", "subset inside the region, remaining particles on a ring",
         {req("region", ParamType::region, "region form (disk center is the ring center)"),
          req("subset", ParamType::indices, "interior particles"),
          req("ring-radius", ParamType::positive, "µm"),
          opt("shared", ParamType::boolean, "allow the subset to overlap other terms")}},
        {"anchor.center", "squared distance of the centroid to a point",
         {req("point", ParamType::point, "µm")}},
        {"anchor.scale", "squared deviation of the RMS radius about the centroid",
         {req("radius", ParamType::positive, "µm")}},
    };
    return kinds;
}

const KindSchema* find_kind(std::string_view kind) {
    const auto& ks = term_kinds();
    auto it = std::find_if(ks.begin(), ks.end(), [&](const KindSchema& k) { return k.kind == kind; });
    return it == ks.end() ? nullptr : &*it;
}

namespace {

void error(std::vector<Diagnostic>& d, Span s, std::string msg) { d.push_back({Severity::error, s, std::move(msg)}); }

bool is_integer(double v) { return std::floor(v) == v; }

bool check_point(const Value& v, std::vector<Diagnostic>& d, std::string_view what) {
    if (!v.is_list() || v.list().items.size() != 2 || !v.list().items[0].is_number() ||
        !v.list().items[1].is_number()) {
        error(d, v.span, std::string(what) + " must be a point [x y]");
        return false;
    }
    return true;
}

bool check_points(const Value& v, std::vector<Diagnostic>& d, std::string_view what, std::size_t min_count) {
    if (!v.is_list()) {
        error(d, v.span, std::string(what) + " must be a list of points [[x y] ...]");
        return false;
    }
    bool ok = true;
    for (const auto& item : v.list().items) ok = check_point(item, d, what) && ok;
    if (ok && v.list().items.size() < min_count) {
        error(d, v.span, std::string(what) + " needs at least " + std::to_string(min_count) + " points");
        return false;
    }
    return ok;
}

void check_form(const Value& v, const std::vector<FormSchema>& family, std::string_view family_name,
                std::vector<Diagnostic>& d);

void check_value(const Value& v, const ParamSchema& p, std::vector<Diagnostic>& d) {
    const std::string what = ":" + p.key;
    switch (p.type) {
        case ParamType::number:
        case ParamType::positive:
        case ParamType::nonnegative:
        case ParamType::count: {
            if (!v.is_number()) {
                error(d, v.span, what + " must be a number");
                return;
            }
            const double x = v.number();
            if (p.type == ParamType::positive && !(x > 0)) error(d, v.span, what + " must be > 0");
            if (p.type == ParamType::nonnegative && !(x >= 0)) error(d, v.span, what + " must be >= 0");
            if (p.type == ParamType::count && (!is_integer(x) || x < 1 || x > 1e7))
                error(d, v.span, what + " must be a positive integer");
            return;
        }
        case ParamType::boolean:
            if (!v.is_symbol() || (v.symbol() != "true" && v.symbol() != "false"))
                error(d, v.span, what + " must be true or false");
            return;
        case ParamType::choice:
            if (!v.is_symbol() || std::find(p.choices.begin(), p.choices.end(), v.symbol()) == p.choices.end()) {
                std::string msg = what + " must be one of:";
                for (const auto& c : p.choices) msg += " " + c;
                error(d, v.span, msg);
            }
            return;
        case ParamType::point: check_point(v, d, what); return;
        case ParamType::points: check_points(v, d, what, 1); return;
        case ParamType::indices: {
            if (!v.is_list()) {
                error(d, v.span, what + " must be a list of particle indices");
                return;
            }
            std::set<double> seen;
            for (const auto& item : v.list().items) {
                if (!item.is_number() || !is_integer(item.number()) || item.number() < 0 || item.number() > 1e7) {
                    error(d, item.span, what + " entries must be non-negative integers");
                } else if (!seen.insert(item.number()).second) {
                    error(d, item.span, what + " contains a duplicate index");
                }
            }
            if (v.list().items.empty()) error(d, v.span, what + " must not be empty");
            return;
        }
        case ParamType::string:
            if (!v.is_string()) error(d, v.span, what + " must be a string");
            return;
        case ParamType::curve: check_form(v, curve_schemas(), "curve", d); return;
        case ParamType::region: check_form(v, region_schemas(), "region", d); return;
        case ParamType::targets:
            if (v.is_list()) {
                check_points(v, d, what, 1);
            } else if (v.is_form()) {
                const auto& head = v.form().head;
                const auto& shapes = shape_schemas();
                bool is_shape = std::any_of(shapes.begin(), shapes.end(),
                                            [&](const FormSchema& s) { return s.head == head; });
                check_form(v, is_shape ? shapes : curve_schemas(), is_shape ? "shape" : "curve", d);
            } else {
                error(d, v.span, what + " must be a point list, shape form, or curve form");
            }
            return;
    }
}

void check_params(const std::vector<KeywordArg>& given, const std::vector<ParamSchema>& schema, Span owner,
                  std::string_view owner_name, std::vector<Diagnostic>& d) {
    for (const auto& kw : given) {
        auto it = std::find_if(schema.begin(), schema.end(), [&](const ParamSchema& p) { return p.key == kw.key; });
        if (it == schema.end()) {
            error(d, kw.key_span, "unknown parameter :" + kw.key + " for " + std::string(owner_name));
            continue;
        }
        check_value(kw.value, *it, d);
    }
    for (const auto& p : schema) {
        if (!p.required) continue;
        bool present = std::any_of(given.begin(), given.end(), [&](const KeywordArg& k) { return k.key == p.key; });
        if (!present) error(d, owner, std::string(owner_name) + " requires :" + p.key);
    }
}

double num_or(const Form& f, std::string_view key, double fallback) {
    const Value* v = f.find(key);
    return v && v->is_number() ? v->number() : fallback;
}

void check_form(const Value& v, const std::vector<FormSchema>& family, std::string_view family_name,
                std::vector<Diagnostic>& d) {
    if (!v.is_form()) {
        error(d, v.span, "expected a " + std::string(family_name) + " form");
        return;
    }
    const Form& f = v.form();
    auto it = std::find_if(family.begin(), family.end(), [&](const FormSchema& s) { return s.head == f.head; });
    if (it == family.end()) {
        std::string msg = "unknown " + std::string(family_name) + " '" + f.head + "'; expected one of:";
        for (const auto& s : family) msg += " " + s.head;
        error(d, v.span, msg);
        return;
    }
    if (f.args.size() != it->positional_strings) {
        error(d, v.span, "'" + f.head + "' takes " + std::to_string(it->positional_strings) + " positional argument(s)");
    } else {
        for (const auto& a : f.args)
            if (!a.is_string()) error(d, a.span, "'" + f.head + "' positional argument must be a string");
    }
    const std::size_t before = d.size();
    check_params(f.kwargs, it->params, v.span, "'" + f.head + "'", d);
    if (d.size() != before) return;

    // Cross-parameter ranges.
    if ((f.head == "polygon" && num_or(f, "sides", 3) < 3) || (f.head == "star" && num_or(f, "points", 3) < 3))
        error(d, v.span, "'" + f.head + "' needs at least 3 vertices");
    if (f.head == "star" && num_or(f, "r-inner", 0) >= num_or(f, "r-outer", 0))
        error(d, v.span, "'star' requires r-inner < r-outer");
    if (f.head == "chain") check_points(*f.find("points"), d, ":points", 2);
    if (f.head == "polygon-mask") check_points(*f.find("points"), d, ":points", 3);
    if (f.head == "segment") {
        const auto& a = f.find("from")->list().items;
        const auto& b = f.find("to")->list().items;
        if (a[0].number() == b[0].number() && a[1].number() == b[1].number())
            error(d, v.span, "'segment' has zero length");
    }
    if (f.head == "rect") {
        const auto& s = f.find("size")->list().items;
        if (!(s[0].number() > 0 && s[1].number() > 0)) error(d, v.span, "'rect' size must be positive");
    }
}

nlohmann::json param_json(const ParamSchema& p) {
    nlohmann::json j;
    switch (p.type) {
        case ParamType::number: j = {{"type", "number"}}; break;
        case ParamType::positive: j = {{"type", "number"}, {"exclusiveMinimum", 0}}; break;
        case ParamType::nonnegative: j = {{"type", "number"}, {"minimum", 0}}; break;
        case ParamType::count: j = {{"type", "integer"}, {"minimum", 1}}; break;
        case ParamType::boolean: j = {{"type", "boolean"}}; break;
        case ParamType::choice: j = {{"type", "string"}, {"enum", p.choices}}; break;
        case ParamType::point:
            j = {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 2}, {"maxItems", 2}};
            break;
        case ParamType::points:
            j = {{"type", "array"},
                 {"items", {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 2}, {"maxItems", 2}}}};
            break;
        case ParamType::indices:
            j = {{"type", "array"}, {"items", {{"type", "integer"}, {"minimum", 0}}}, {"uniqueItems", true}};
            break;
        case ParamType::string: j = {{"type", "string"}}; break;
        case ParamType::curve: j = {{"$ref", "#/forms/curve"}}; break;
        case ParamType::region: j = {{"$ref", "#/forms/region"}}; break;
        case ParamType::targets:
            j = {{"anyOf", {{{"$ref", "#/forms/shape"}}, {{"$ref", "#/forms/curve"}}, {{"type", "array"}}}}};
            break;
    }
    j["description"] = p.doc;
    j["x-dsl-type"] = to_string(p.type);
    return j;
}

nlohmann::json object_schema(const std::vector<ParamSchema>& params, std::string_view doc) {
    nlohmann::json props = nlohmann::json::object();
    nlohmann::json required = nlohmann::json::array();
    for (const auto& p : params) {
        props[p.key] = param_json(p);
        if (p.required) required.push_back(p.key);
    }
    return {{"type", "object"}, {"description", doc}, {"properties", props}, {"required", required},
            {"additionalProperties", false}};
}

nlohmann::json family_json(const std::vector<FormSchema>& family) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& f : family) {
        auto j = object_schema(f.params, f.doc);
        j["x-positional-strings"] = f.positional_strings;
        out[f.head] = j;
    }
    return out;
}

}  // namespace

void validate_term(const TermNode& term, std::vector<Diagnostic>& diags) {
    const KindSchema* k = find_kind(term.kind);
    if (!k) {
        std::string msg = "unknown term kind '" + term.kind + "'; expected one of:";
        for (const auto& ks : term_kinds()) msg += " " + ks.kind;
        diags.push_back({Severity::error, term.span, msg});
        return;
    }
    check_params(term.params, k->params, term.span, "term " + term.kind, diags);
}

nlohmann::json registry_json() {
    nlohmann::json kinds = nlohmann::json::object();
    for (const auto& k : term_kinds()) {
        auto j = object_schema(k.params, k.doc);
        j["properties"]["weight"] = {{"type", "number"}, {"minimum", 0}, {"description", "pre-factor (default 1)"}};
        kinds[k.kind] = j;
    }
    return {{"terms", kinds},
            {"forms",
             {{"curve", family_json(curve_schemas())},
              {"shape", family_json(shape_schemas())},
              {"region", family_json(region_schemas())}}}};
}

}  // namespace flowscribe::dsl
