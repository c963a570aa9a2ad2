#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowscribe/geometry.hpp"
#include "flowscribe/terms/objective.hpp"

namespace flowscribe::potential {

struct SolveOptions {
    int max_iters = 3000;
    /// Stop when max_i |grad_i| * norm_length falls below this.
    double tolerance = 1e-6;
    std::uint64_t seed = 0;
    int restarts = 3;
    int memory = 8;             // L-BFGS pairs
    double armijo_c = 1e-4;
    int max_backtracks = 60;
    /// Also stop when f has improved by less than rel_ftol * (1 + |f|) over `stall_window` iterations.
    double rel_ftol = 1e-12;
    int stall_window = 25;
    /// Record a frame every k accepted iterations (0: none).
    int record_every = 0;
};

enum class StopReason { gradient, stalled, line_search, max_iters };
std::string to_string(StopReason r);

struct SolveTrace {
    std::vector<double> objective;  // initial value followed by one entry per accepted iteration
    ParticleConfig initial;
    ParticleConfig final;
    std::vector<ParticleConfig> frames;
    bool converged = false;
    StopReason reason = StopReason::max_iters;
    int iterations = 0;
    int evaluations = 0;
    int restart = 0;          // index of the winning restart
    double grad_norm = 0.0;   // final max_i |grad_i| * norm_length
};

/// Gradient descent from a given configuration (L-BFGS with Armijo backtracking).
/// Label-free objectives are solved in a canonical particle order, so relabelling the input
/// only relabels the output.
SolveTrace descend(const terms::CompiledObjective& obj, const ParticleConfig& start, const SolveOptions& opts);

/// Best of opts.restarts descents from uniform-random starts inside fov.
SolveTrace solve_potential(const terms::CompiledObjective& obj, std::size_t n, const Rect& fov,
                           const SolveOptions& opts);

/// Uniform random configuration inside fov (deterministic in seed).
ParticleConfig random_config(std::size_t n, const Rect& fov, std::uint64_t seed);

}  // namespace flowscribe::potential
