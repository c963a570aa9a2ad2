#pragma once

#include <string>
#include <vector>

#include "flowscribe/dsl/ast.hpp"
#include "flowscribe/geometry.hpp"

namespace flowscribe::terms {

/// Target points, optionally labelled per point (glyph, hexagon id, ...).
struct TargetSet {
    std::vector<Vec2> points;
    std::vector<std::string> labels;

    std::size_t size() const { return points.size(); }
};

enum class CurveKind { circle, ellipse, sinusoid, spiral, heart, polygon, star, segment, chain };

struct CurveDef {
    CurveKind kind = CurveKind::circle;
    double r = 0.0;          // circle, polygon circumradius, star outer radius
    double r_inner = 0.0;    // star
    double a = 0.0, b = 0.0; // ellipse semi-axes; spiral start radius in a
    double amplitude = 0.0, period = 0.0, length = 0.0;
    double pitch = 0.0, turns = 0.0;
    double size = 0.0;       // heart
    int sides = 0;           // polygon sides, star tips
    std::vector<Vec2> points;  // chain
    bool closed = false;       // chain
    Vec2 from, to;             // segment
    Vec2 center;
    double angle = 0.0;  // radians

    bool is_closed() const;
    bool is_polygonal() const;
};

/// Builds a curve from a DSL form such as `(circle :r 20)`. Angles in the form are degrees.
CurveDef curve_from_value(const dsl::Value& form);

/// Vertices of a polygonal curve in world coordinates (closed curves do not repeat the first vertex).
std::vector<Vec2> curve_vertices(const CurveDef& c);

/// Point at parameter t in [0, 1] (smooth kinds: native parameter; polygonal kinds: vertex-index parameter).
Vec2 curve_point(const CurveDef& c, double t);

/// Open polyline with k+1 points (closed curves: last point equals the first) in parameter space.
std::vector<Vec2> dense_polyline(const CurveDef& c, std::size_t k);

double curve_length(const CurveDef& c);

/// m points equally spaced in arc length. Closed curves do not duplicate the endpoint.
TargetSet sample_curve(const CurveDef& c, std::size_t m);

}  // namespace flowscribe::terms
