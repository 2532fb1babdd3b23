#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "advshift/simplex.hpp"

namespace advshift {

// Hyperparameters of the KL-ball adversary.
//
// The penalty strength gamma_c and the proximal scale lambda are tied by the
// convention 2*gamma_c*lambda = 1 in the defaults; callers may override
// either one independently.
struct AdversaryConfig {
    double r = 0.1;        // KL-ball radius (nats)
    double gamma_c = 1.0;  // Lagrange penalty strength
    double lambda = 0.5;   // proximal step scale (KL term weight 1/(2*lambda))
    double epsilon = 1e-3; // uniform-mixture stabilizer, entry floor epsilon/L
    double clip = 2.0;     // adversarial loss clip level
    double beta = 0.999;   // EMA decay for the empirical label marginal

    // Penalty multiplier used when the iterate violates the KL radius.
    double alpha_active() const { return 2.0 * gamma_c * lambda; }

    // r and gamma_c given, lambda from the 2*gamma_c*lambda = 1 convention.
    static AdversaryConfig with_convention(double r, double gamma_c);

    void validate() const;
};

// Adversary distribution pi, the running EMA estimate of the empirical label
// marginal, and the step counter. A value type: step functions return new
// distributions, the training loop owns the single instance.
struct AdversaryState {
    LabelDistribution pi;
    LabelDistribution p_emp;
    std::size_t step = 0;

    static AdversaryState initial(std::size_t n_classes);
};

// Importance-weighted per-class adversarial gradient:
//   g(i) = (1/b) sum_{j: y_j = i} min(loss_j, clip) / p_emp(i).
// Classes absent from the batch get 0.
std::vector<double> adversary_gradient(const std::vector<int>& batch_labels,
                                       const std::vector<double>& batch_losses,
                                       const LabelDistribution& p_emp, double clip);

// Sign-test switch: 0 when KL(pi ‖ p_emp) <= r, else 2*gamma_c*lambda.
// Exact equality takes the interior branch.
double lagrange_alpha(const LabelDistribution& pi, const LabelDistribution& p_emp,
                      const AdversaryConfig& cfg);

// Exact step size of the proximal mirror-ascent update below.
//
// Stationarity of the proximal objective (see proximal_objective) over the
// simplex gives
//   pi_next(i) ∝ (pi_t(i) * p_emp(i)^alpha)^(1/(1+alpha)) * exp(eta * g(i))
// with eta = 2*lambda/(1+alpha). Two other constants circulate for this
// update, 2*lambda/(1+alpha)^2 and lambda/(1+alpha)^2; neither minimises the
// objective (the grid oracle in the tests rejects both).
double mirror_step_size(double alpha, double lambda);

// Closed-form proximal mirror-ascent update: geometric interpolation of pi_t
// and p_emp, exponential tilt by eta*g, normalisation, then the epsilon
// uniform mixture. Computed in log space with max-subtraction shielding.
// eta_override substitutes the tilt step size (used by the training loop's
// tuning knob); the default is the exact minimiser's step mirror_step_size.
LabelDistribution mirror_proximal_update(const AdversaryState& state,
                                         const std::vector<double>& g, double alpha,
                                         const AdversaryConfig& cfg,
                                         std::optional<double> eta_override = std::nullopt);

// EMA of the empirical label marginal:
//   p' = beta * p_emp + (1-beta) * histogram(batch)/b.
LabelDistribution ema_update(const LabelDistribution& p_emp,
                             const std::vector<int>& batch_labels, double beta);

// The objective the update minimises over the simplex:
//   J(pi) = alpha/(2 lambda) KL(pi ‖ p_emp)
//         + 1/(2 lambda)     KL(pi ‖ pi_t)
//         - <g, pi>.
// Exposed so tests and grid oracles can score candidates.
double proximal_objective(const LabelDistribution& pi, const AdversaryState& state,
                          const std::vector<double>& g, double alpha,
                          const AdversaryConfig& cfg);

}  // namespace advshift
