#pragma once

#include <vector>

#include "flowscribe/dsl/ast.hpp"
#include "flowscribe/geometry.hpp"

namespace flowscribe::terms {

enum class RegionKind { disk, rect, polygon };

struct Region {
    RegionKind kind = RegionKind::disk;
    Vec2 center;
    double r = 0.0;              // disk
    Vec2 size;                   // rect width, height
    std::vector<Vec2> vertices;  // polygon
    double w = 1.0;              // soft-edge width

    static Region disk(Vec2 c, double r, double w = 1.0);
    static Region rect(Vec2 c, Vec2 size, double w = 1.0);
    static Region polygon(std::vector<Vec2> vertices, double w = 1.0);

    double area() const;
    bool contains(Vec2 p) const;
    /// Reference point: disk/rect center, polygon area centroid.
    Vec2 anchor() const;
    /// Smooth membership in (0, 1) and its gradient.
    double membership(Vec2 p, Vec2* grad = nullptr) const;
    /// Distance from p to the closest place where membership is not smooth (disk center, polygon medial set).
    double smooth_margin(Vec2 p) const;
};

Region region_from_value(const dsl::Value& form);

double logistic(double x);

}  // namespace flowscribe::terms
