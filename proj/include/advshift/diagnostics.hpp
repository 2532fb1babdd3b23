#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advshift/adversary.hpp"
#include "advshift/dataset.hpp"
#include "advshift/evaluator.hpp"
#include "advshift/model.hpp"
#include "advshift/trainer.hpp"

namespace advshift {

struct DiagnosticsReport {
    double sigma_hat = 0.0;      // max sampled minibatch-gradient deviation
    double g_hat = 0.0;          // max sampled ||g_pi||_inf
    double g_bound = 0.0;        // analytic clip / min p_emp
    double lipschitz_hat = 0.0;  // max sampled |F(w1)-F(w2)| / ||w1-w2||
    double smooth_hat = 0.0;     // max sampled ||grad(w1)-grad(w2)|| / ||w1-w2||
    double r_hat = 0.0;          // max KL(pi_t || p_emp) over recorded epochs
    double r_bound = 0.0;        // log(L / epsilon), the stabilizer floor bound
    std::vector<double> moreau_trace;

    void validate() const;
};

// Robust objective of the outer minimization at fixed parameters: the
// penalized inner maximum over the per-class mean clipped losses.
double robust_objective(const ModelParams& params, const Dataset& data,
                        const AdversaryConfig& cfg);

// Gradient of robust_objective at the inner maximizer (the payoff is linear
// in pi, so the witness's importance weights drive the chain rule; examples
// sitting above the clip contribute zero).
std::vector<double> robust_objective_gradient(const ModelParams& params, const Dataset& data,
                                              const AdversaryConfig& cfg);

// || grad of the Moreau envelope F_{1/(2 L_hat)} at params || estimated as
// 2 L_hat ||theta - theta_hat||, theta_hat = argmin_w F(w) + L_hat ||w - theta||^2
// found by gradient descent with backtracking. Descent stops at gradient norm
// 1e-6 or when no step improves the prox objective at double precision; the
// latter is the normal exit near minimizers of F, where the inner max has
// tied witnesses and the raw gradient norm stays bounded away from zero.
double moreau_stationarity(const ModelParams& params, const Dataset& data,
                           const AdversaryConfig& cfg, double l_hat);

DiagnosticsReport estimate_assumption_constants(const TrainResult& result, const Dataset& data,
                                                const TrainConfig& cfg, std::size_t samples,
                                                std::uint64_t seed);

struct KlRecursionReport {
    std::size_t trials = 0;
    std::size_t probes = 0;
    std::size_t violations = 0;
    double worst_gap = 0.0;  // most negative slack seen (>= 0 means all held)
    bool passed() const { return violations == 0; }
};

// Samples objectives l(x) = <c,x> + a KL(x||q), computes
// x* = argmin l(x) + KL(x||x0) in closed form, and probes
//   l(x') + KL(x'||x0) >= l(x*) + KL(x*||x0) + KL(x'||x*) - tol
// at random x'. With plant_violation the tested point is perturbed off the
// argmin, so the probes must report failures (falsification control).
KlRecursionReport kl_recursion_check(std::size_t trials, std::size_t probes, std::uint64_t seed,
                                     double tol = 1e-6, bool plant_violation = false);

// eta_theta = T^{-3/4}, batch = T^{1/2}, lambda = T^{-1/4} for a total step
// budget T; used by the diagnostic runs only.
TrainConfig theory_schedule(TrainConfig base, std::size_t total_steps, std::size_t dataset_size);

// report.txt: key = value lines, one per estimate; moreau_trace flattened.
void save_report(const DiagnosticsReport& report, const std::string& path);

}  // namespace advshift
