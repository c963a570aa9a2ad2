#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "flowscribe/dsl/ast.hpp"
#include "flowscribe/geometry.hpp"

namespace flowscribe::terms::detail {

inline double num(const dsl::Form& f, std::string_view key, double fallback) {
    const dsl::Value* v = f.find(key);
    return v && v->is_number() ? v->number() : fallback;
}

inline double num(const dsl::Form& f, std::string_view key) {
    const dsl::Value* v = f.find(key);
    if (!v || !v->is_number())
        throw std::invalid_argument("(" + f.head + ") requires numeric :" + std::string(key));
    return v->number();
}

inline Vec2 to_point(const dsl::Value& v) {
    if (!v.is_list() || v.list().items.size() != 2 || !v.list().items[0].is_number() ||
        !v.list().items[1].is_number())
        throw std::invalid_argument("expected a point [x y]");
    return {v.list().items[0].number(), v.list().items[1].number()};
}

inline Vec2 point(const dsl::Form& f, std::string_view key, Vec2 fallback = {}) {
    const dsl::Value* v = f.find(key);
    return v ? to_point(*v) : fallback;
}

inline std::vector<Vec2> to_points(const dsl::Value& v) {
    if (!v.is_list()) throw std::invalid_argument("expected a list of points");
    std::vector<Vec2> out;
    for (const auto& item : v.list().items) out.push_back(to_point(item));
    return out;
}

inline bool flag(const dsl::Form& f, std::string_view key) {
    const dsl::Value* v = f.find(key);
    return v && v->is_symbol() && v->symbol() == "true";
}

}  // namespace flowscribe::terms::detail
