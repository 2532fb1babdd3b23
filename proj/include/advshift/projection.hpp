#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advshift/simplex.hpp"

namespace advshift {

// Nearest (squared Euclidean) simplex point q to p with KL(q || p_ref) <= r.
// Penalty continuation over a squared hinge on the KL excess, each stage
// solved by projected gradient descent with backtracking. Guarantees
// KL(q || p_ref) <= r (1 + 1e-2) on return; throws NonConvergence otherwise.
LabelDistribution kl_ball_project(const std::vector<double>& p, const LabelDistribution& p_ref,
                                  double r);

struct ProjectionBenchmark {
    std::size_t n_classes = 0;
    std::size_t trials = 0;
    double median_projection_ms = 0.0;
    double median_mirror_ms = 0.0;
    double ratio = 0.0;  // projection / mirror
};

// Times kl_ball_project against mirror_proximal_update on seeded random
// instances of the same dimension. Single-threaded on purpose.
ProjectionBenchmark projection_benchmark(std::size_t n_classes, std::size_t trials,
                                         std::uint64_t seed);

// bench.csv: L,trials,median_projection_ms,median_mirror_ms,ratio
void save_benchmark_csv(const ProjectionBenchmark& bench, const std::string& path);

}  // namespace advshift
