// Stroke font on a 4 x 6 grid, y up. One to four polylines per glyph.

#include <array>
#include <cctype>
#include <stdexcept>

#include "flowscribe/terms/shapes.hpp"

namespace flowscribe::terms {

namespace {

using S = std::vector<Vec2>;

const S kRing = {{1, 0}, {0, 1}, {0, 5}, {1, 6}, {3, 6}, {4, 5}, {4, 1}, {3, 0}, {1, 0}};
const S kBowlP = {{0, 0}, {0, 6}, {3, 6}, {4, 5}, {4, 4}, {3, 3}, {0, 3}};

struct Entry {
    char c;
    Glyph g;
};

const std::vector<Entry>& table() {
    static const std::vector<Entry> t = {
        {'A', {{{{0, 0}, {2, 6}, {4, 0}}, {{1, 3}, {3, 3}}}}},
        {'B', {{{{0, 0}, {0, 6}, {3, 6}, {4, 5}, {4, 4}, {3, 3}, {0, 3}},
                {{3, 3}, {4, 2}, {4, 1}, {3, 0}, {0, 0}}}}},
        {'C', {{{{4, 5}, {3, 6}, {1, 6}, {0, 5}, {0, 1}, {1, 0}, {3, 0}, {4, 1}}}}},
        {'D', {{{{0, 0}, {0, 6}, {2, 6}, {4, 4}, {4, 2}, {2, 0}, {0, 0}}}}},
        {'E', {{{{4, 6}, {0, 6}, {0, 0}, {4, 0}}, {{0, 3}, {3, 3}}}}},
        {'F', {{{{4, 6}, {0, 6}, {0, 0}}, {{0, 3}, {3, 3}}}}},
        {'G', {{{{4, 5}, {3, 6}, {1, 6}, {0, 5}, {0, 1}, {1, 0}, {3, 0}, {4, 1}, {4, 3}, {2, 3}}}}},
        {'H', {{{{0, 0}, {0, 6}}, {{4, 0}, {4, 6}}, {{0, 3}, {4, 3}}}}},
        {'I', {{{{2, 0}, {2, 6}}, {{1, 6}, {3, 6}}, {{1, 0}, {3, 0}}}}},
        {'J', {{{{4, 6}, {4, 1}, {3, 0}, {1, 0}, {0, 1}}}}},
        {'K', {{{{0, 0}, {0, 6}}, {{4, 6}, {0, 2}}, {{1, 3}, {4, 0}}}}},
        {'L', {{{{0, 6}, {0, 0}, {4, 0}}}}},
        {'M', {{{{0, 0}, {0, 6}, {2, 3}, {4, 6}, {4, 0}}}}},
        {'N', {{{{0, 0}, {0, 6}, {4, 0}, {4, 6}}}}},
        {'O', {{kRing}}},
        {'P', {{kBowlP}}},
        {'Q', {{kRing, {{2, 2}, {4, 0}}}}},
        {'R', {{kBowlP, {{2, 3}, {4, 0}}}}},
        {'S', {{{{4, 5}, {3, 6}, {1, 6}, {0, 5}, {0, 4}, {1, 3}, {3, 3}, {4, 2}, {4, 1}, {3, 0}, {1, 0}, {0, 1}}}}},
        {'T', {{{{0, 6}, {4, 6}}, {{2, 6}, {2, 0}}}}},
        {'U', {{{{0, 6}, {0, 1}, {1, 0}, {3, 0}, {4, 1}, {4, 6}}}}},
        {'V', {{{{0, 6}, {2, 0}, {4, 6}}}}},
        {'W', {{{{0, 6}, {1, 0}, {2, 3}, {3, 0}, {4, 6}}}}},
        {'X', {{{{0, 0}, {4, 6}}, {{0, 6}, {4, 0}}}}},
        {'Y', {{{{0, 6}, {2, 3}, {4, 6}}, {{2, 3}, {2, 0}}}}},
        {'Z', {{{{0, 6}, {4, 6}, {0, 0}, {4, 0}}}}},
        {'0', {{kRing, {{0, 1}, {4, 5}}}}},
        {'1', {{{{1, 5}, {2, 6}, {2, 0}}, {{1, 0}, {3, 0}}}}},
        {'2', {{{{0, 5}, {1, 6}, {3, 6}, {4, 5}, {4, 4}, {0, 0}, {4, 0}}}}},
        {'3', {{{{0, 5}, {1, 6}, {3, 6}, {4, 5}, {4, 4}, {3, 3}, {4, 2}, {4, 1}, {3, 0}, {1, 0}, {0, 1}},
                {{1, 3}, {3, 3}}}}},
        {'4', {{{{3, 0}, {3, 6}, {0, 2}, {4, 2}}}}},
        {'5', {{{{4, 6}, {0, 6}, {0, 3}, {3, 3}, {4, 2}, {4, 1}, {3, 0}, {0, 0}}}}},
        {'6', {{{{4, 5}, {3, 6}, {1, 6}, {0, 5}, {0, 1}, {1, 0}, {3, 0}, {4, 1}, {4, 2}, {3, 3}, {0, 3}}}}},
        {'7', {{{{0, 6}, {4, 6}, {1, 0}}}}},
        {'8', {{{{1, 3}, {0, 4}, {0, 5}, {1, 6}, {3, 6}, {4, 5}, {4, 4}, {3, 3}, {1, 3},
                 {0, 2}, {0, 1}, {1, 0}, {3, 0}, {4, 1}, {4, 2}, {3, 3}}}}},
        {'9', {{{{4, 3}, {1, 3}, {0, 4}, {0, 5}, {1, 6}, {3, 6}, {4, 5}, {4, 1}, {3, 0}, {1, 0}, {0, 1}}}}},
        {' ', {{}}},
    };
    return t;
}

const Entry* find(char c) {
    const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& e : table())
        if (e.c == u) return &e;
    return nullptr;
}

}  // namespace

bool has_glyph(char c) { return find(c) != nullptr; }

const Glyph& glyph(char c) {
    const Entry* e = find(c);
    if (!e) throw std::invalid_argument(std::string("unsupported glyph '") + c + "'");
    return e->g;
}

TextLayout layout_text(std::string_view text, double height, double tracking) {
    if (text.empty()) throw std::invalid_argument("text is empty");
    for (char c : text)
        if (!has_glyph(c)) throw std::invalid_argument(std::string("unsupported glyph '") + c + "'");
    const double scale = height / kGlyphHeight;
    const double advance = kGlyphWidth * scale + tracking * height;
    const double total_w = advance * static_cast<double>(text.size() - 1) + kGlyphWidth * scale;
    const Vec2 origin{-0.5 * total_w, -0.5 * height};

    TextLayout out;
    for (std::size_t k = 0; k < text.size(); ++k) {
        const Vec2 o = origin + Vec2{advance * static_cast<double>(k), 0.0};
        out.glyph_boxes.push_back({o.x, o.y, o.x + kGlyphWidth * scale, o.y + height});
        for (const auto& stroke : glyph(text[k]).strokes) {
            std::vector<Vec2> w;
            for (const auto& p : stroke) w.push_back(o + p * scale);
            out.strokes.push_back(std::move(w));
            out.stroke_glyph.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(text[k]))));
        }
    }
    return out;
}

}  // namespace flowscribe::terms
