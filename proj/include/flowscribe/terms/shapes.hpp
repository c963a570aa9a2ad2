#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "flowscribe/terms/curves.hpp"

namespace flowscribe::terms {

struct Edge {
    Vec2 a, b;
    std::string label;
};

/// m points on the edges: m / E per edge, remainder handed out round-robin from edge 0.
/// Each edge contributes points at fractions j / count_e, start vertex included, end excluded.
TargetSet sample_edges(const std::vector<Edge>& edges, std::size_t m);

std::vector<Edge> polygon_edges(int sides, double r);
std::vector<Edge> star_edges(int tips, double r_outer, double r_inner);
std::vector<Edge> pentagram_edges(double r);
/// Three hexagons of side s with centers (0,0), (1.5s, s*sqrt(3)/2), (3s, 0), recentered on the union centroid.
std::vector<Edge> hexagon_trio_edges(double s);

struct Glyph {
    std::vector<std::vector<Vec2>> strokes;  // font units, box [0, kGlyphWidth] x [0, kGlyphHeight]
};
inline constexpr double kGlyphWidth = 4.0;
inline constexpr double kGlyphHeight = 6.0;

/// Embedded stroke font (A-Z, 0-9, space). Lowercase maps to uppercase. Throws for anything else.
const Glyph& glyph(char c);
bool has_glyph(char c);

struct TextLayout {
    std::vector<std::vector<Vec2>> strokes;  // world coordinates, µm
    std::vector<char> stroke_glyph;
    std::vector<Rect> glyph_boxes;           // one per rendered character
};

/// Lays out `text` with the given glyph height and tracking (gap as a fraction of height),
/// centered at the origin.
TextLayout layout_text(std::string_view text, double height, double tracking);

/// m points on a set of open polylines, allocated proportionally to length (largest remainder).
TargetSet sample_strokes(const std::vector<std::vector<Vec2>>& strokes, std::size_t m,
                         const std::vector<std::string>& labels = {});

/// Shape forms: polygon, star, pentagram, hexagon-trio, text. Throws std::invalid_argument on unknown shapes
/// or unsupported glyphs.
TargetSet gen_shape(const dsl::Value& form, std::size_t m);

/// Resolves a `:targets` value: explicit point list, shape form, or curve form (sampled with m points).
TargetSet resolve_targets(const dsl::Value& v, std::size_t m);

}  // namespace flowscribe::terms
