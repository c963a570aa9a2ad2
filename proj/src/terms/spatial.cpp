#include "flowscribe/terms/spatial.hpp"

#include <cmath>

namespace flowscribe::terms {

PointGrid::PointGrid(const std::vector<Vec2>& points) : pts_(points) {
    if (pts_.empty()) return;
    double x1 = pts_[0].x, y1 = pts_[0].y;
    x0_ = x1;
    y0_ = y1;
    for (const auto& p : pts_) {
        x0_ = std::min(x0_, p.x);
        y0_ = std::min(y0_, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
    }
    const double w = std::max(x1 - x0_, 1e-9);
    const double h = std::max(y1 - y0_, 1e-9);
    // about two points per cell, at most 512 cells per side
    cell_ = std::max(std::sqrt(2.0 * w * h / static_cast<double>(pts_.size())), std::max(w, h) / 512.0);
    nx_ = static_cast<long>(w / cell_) + 1;
    ny_ = static_cast<long>(h / cell_) + 1;
    const std::size_t cells = static_cast<std::size_t>(nx_ * ny_);
    start_.assign(cells + 1, 0);
    std::vector<std::size_t> cell_of(pts_.size());
    for (std::size_t i = 0; i < pts_.size(); ++i) {
        const long cx = std::min(nx_ - 1, static_cast<long>((pts_[i].x - x0_) / cell_));
        const long cy = std::min(ny_ - 1, static_cast<long>((pts_[i].y - y0_) / cell_));
        cell_of[i] = static_cast<std::size_t>(cy * nx_ + cx);
        ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) start_[c + 1] += start_[c];
    items_.resize(pts_.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts_.size(); ++i) items_[fill[cell_of[i]]++] = i;  // ascending within a cell
}

PointGrid::Hit PointGrid::nearest(Vec2 q, std::size_t skip, bool want_second) const {
    Hit hit;
    if (pts_.empty()) return hit;
    auto consider = [&](std::size_t i) {
        if (i == skip) return;
        const double d2 = (pts_[i] - q).norm2();
        if (d2 < hit.d2 || (d2 == hit.d2 && i < hit.index)) {
            hit.second_d2 = hit.d2;
            hit.second = hit.index;
            hit.d2 = d2;
            hit.index = i;
        } else if (d2 < hit.second_d2 || (d2 == hit.second_d2 && i < hit.second)) {
            hit.second_d2 = d2;
            hit.second = i;
        }
    };
    const long cx = std::clamp(static_cast<long>(std::floor((q.x - x0_) / cell_)), 0L, nx_ - 1);
    const long cy = std::clamp(static_cast<long>(std::floor((q.y - y0_) / cell_)), 0L, ny_ - 1);
    const long rmax = std::max(nx_, ny_);
    for (long r = 0; r <= rmax; ++r) {
        for (long iy = cy - r; iy <= cy + r; ++iy) {
            if (iy < 0 || iy >= ny_) continue;
            const bool edge_row = (iy == cy - r || iy == cy + r);
            for (long ix = cx - r; ix <= cx + r; ix += (edge_row ? 1 : 2 * r)) {
                if (ix >= 0 && ix < nx_) {
                    const std::size_t c = static_cast<std::size_t>(iy * nx_ + ix);
                    for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) consider(items_[k]);
                }
                if (r == 0) break;
            }
        }
        // every point in ring r+1 or beyond is at least r * cell away
        const double lb = static_cast<double>(r) * cell_;
        const double need = want_second ? hit.second_d2 : hit.d2;
        if (lb * lb > need) break;
    }
    return hit;
}

}  // namespace flowscribe::terms
