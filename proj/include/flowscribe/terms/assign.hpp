#pragma once

#include <cstddef>
#include <vector>

#include "flowscribe/geometry.hpp"

namespace flowscribe::terms {

enum class AssignMode { nearest, balanced };

struct Assignment {
    std::vector<std::size_t> target;  // particle i -> target index
    double cost = 0.0;                // total squared distance
    bool exact = true;                // false when the heuristic path was used
};

/// Largest n solved exactly in balanced mode; larger problems use greedy matching plus 2-swap refinement.
inline constexpr std::size_t kExactAssignLimit = 64;

/// Throws std::invalid_argument for balanced mode with more particles than targets.
Assignment assign(const std::vector<Vec2>& particles, const std::vector<Vec2>& targets, AssignMode mode);

/// Minimum-cost injective assignment of rows to columns for an n x m cost matrix (n <= m), row-major.
std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t n, std::size_t m);

}  // namespace flowscribe::terms
