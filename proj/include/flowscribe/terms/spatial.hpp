#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "flowscribe/geometry.hpp"

namespace flowscribe::terms {

/// Uniform bucket grid for nearest-neighbour queries. Ties resolve to the lowest index.
class PointGrid {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    struct Hit {
        std::size_t index = npos;
        double d2 = std::numeric_limits<double>::infinity();
        double second_d2 = std::numeric_limits<double>::infinity();
        std::size_t second = npos;
    };

    PointGrid() = default;
    explicit PointGrid(const std::vector<Vec2>& points);

    /// Nearest stored point, skipping index `skip`. With `want_second`, also the runner-up distance.
    Hit nearest(Vec2 q, std::size_t skip = npos, bool want_second = false) const;

    std::size_t size() const { return pts_.size(); }
    const std::vector<Vec2>& points() const { return pts_; }

private:
    std::vector<Vec2> pts_;
    double x0_ = 0, y0_ = 0, cell_ = 1;
    long nx_ = 1, ny_ = 1;
    std::vector<std::size_t> start_;  // CSR offsets, size nx*ny+1
    std::vector<std::size_t> items_;
};

}  // namespace flowscribe::terms
