#pragma once

#include <cstddef>

#include "flowscribe/geometry.hpp"
#include "flowscribe/terms/region.hpp"

namespace flowscribe::control {

struct SquarePose {
    Vec2 center;
    double angle = 0.0;      // [0, pi/2)
    double half_side = 1.0;
};

/// Distance from p to the perimeter of the square with the given pose.
double square_perimeter_distance(Vec2 p, const SquarePose& s);

/// RMS perimeter distance over half-side at a fixed pose.
double square_fit_cost(const std::vector<Vec2>& pts, const SquarePose& s);

struct SquareFit {
    SquarePose pose;
    double index = 0.0;
};

/// Best-fitting square centered on the centroid: perimeter fit over angle and half-side by a coarse
/// grid and Nelder-Mead refinement. With exactly four points, a least-squares similarity fit to the corners.
SquareFit fit_square(const std::vector<Vec2>& pts);

/// Pose-free squareness: 0 for points spread evenly over a square perimeter (four points: on its corners).
/// Needs n >= 4 and non-coincident points.
double squareness_index(const ParticleConfig& a);

/// (k/n) / alpha with k the hard count inside the region and alpha = region area / fov area.
double density_ratio(const ParticleConfig& a, const terms::Region& region);

/// log P(K >= k) for K ~ Binomial(n, alpha).
double log_spontaneous_probability(long n, long k, double alpha);
double spontaneous_probability(long n, long k, double alpha);

}  // namespace flowscribe::control
