#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "advshift/dataset.hpp"
#include "advshift/model.hpp"

// Brute-force oracles the tests trust instead of the library's own closed
// forms: exhaustive simplex grids, finite differences, and independent
// hand-written recomputations.
namespace testsupport {

using ScalarFn = std::function<double(const std::vector<double>&)>;

// Visit every point of the simplex whose entries are integer multiples of
// 1/denominator (boundary points included).
void for_each_simplex_point(std::size_t n_classes, std::size_t denominator,
                            const std::function<void(const std::vector<double>&)>& fn);

struct GridBest {
    std::vector<double> point;
    double value = 0.0;
};

// Exhaustive minimum over the 1/denominator grid. skip_boundary drops points
// with zero entries (for objectives containing log pi terms).
GridBest grid_minimize_dense(std::size_t n_classes, std::size_t denominator, bool skip_boundary,
                             const ScalarFn& fn);

// Minimum of a convex function: dense coarse grid, then box zooms around the
// incumbent down to lattice pitch <= final_step. A zoom box that ends with
// its best point on a radius-limited edge is retried with a doubled radius.
GridBest grid_minimize_zoom(std::size_t n_classes, double coarse_step, double final_step,
                            bool skip_boundary, const ScalarFn& fn);

// max <pi, e> over grid points with hand_kl(pi, p_ref) <= tau, one grid pass
// for all taus. Returns one value per tau.
std::vector<double> grid_constrained_max(const std::vector<double>& e,
                                         const std::vector<double>& p_ref,
                                         const std::vector<double>& taus,
                                         std::size_t denominator);

// Independent KL summation (0 log 0 := 0); no clamping, no validation.
double hand_kl(const std::vector<double>& p, const std::vector<double>& q);

double l1_dist(const std::vector<double>& a, const std::vector<double>& b);
double l2_dist(const std::vector<double>& a, const std::vector<double>& b);
double linf_dist(const std::vector<double>& a, const std::vector<double>& b);

// Central finite differences, step h per coordinate.
std::vector<double> fd_gradient(const ScalarFn& f, const std::vector<double>& x, double h);

// Per-class error rates counted through an explicit confusion matrix built
// from raw logits (does not call predict()).
std::vector<double> confusion_error_rates(const advshift::ModelParams& params,
                                          const advshift::Dataset& data);

}  // namespace testsupport
