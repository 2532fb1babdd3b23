#include "advshift/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "advshift/errors.hpp"

namespace advshift {

AdversaryConfig AdversaryConfig::with_convention(double r, double gamma_c) {
    AdversaryConfig cfg;
    cfg.r = r;
    cfg.gamma_c = gamma_c;
    cfg.lambda = 1.0 / (2.0 * gamma_c);
    return cfg;
}

void AdversaryConfig::validate() const {
    if (!(r >= 0.0)) throw ConfigError("adversary: r must be >= 0");
    if (!(gamma_c >= 0.0)) throw ConfigError("adversary: gamma_c must be >= 0");
    if (!(lambda > 0.0)) throw ConfigError("adversary: lambda must be > 0");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("adversary: epsilon must be in [0,1)");
    if (!(clip > 0.0)) throw ConfigError("adversary: clip must be > 0");
    if (!(beta > 0.0 && beta < 1.0) && beta != 1.0 && beta != 0.0) {
        throw ConfigError("adversary: beta must be in [0,1]");
    }
}

AdversaryState AdversaryState::initial(std::size_t n_classes) {
    return AdversaryState{LabelDistribution::uniform(n_classes),
                          LabelDistribution::uniform(n_classes), 0};
}

std::vector<double> adversary_gradient(const std::vector<int>& batch_labels,
                                       const std::vector<double>& batch_losses,
                                       const LabelDistribution& p_emp, double clip) {
    if (batch_labels.size() != batch_losses.size()) {
        throw DomainError("adversary_gradient: labels/losses length mismatch");
    }
    if (batch_labels.empty()) throw DomainError("adversary_gradient: empty batch");
    const double b = static_cast<double>(batch_labels.size());
    std::vector<double> g(p_emp.size(), 0.0);
    for (std::size_t j = 0; j < batch_labels.size(); ++j) {
        const int y = batch_labels[j];
        if (y < 0 || static_cast<std::size_t>(y) >= p_emp.size()) {
            throw DomainError("adversary_gradient: label " + std::to_string(y) + " out of range");
        }
        if (p_emp[static_cast<std::size_t>(y)] <= 0.0) {
            throw DomainError("adversary_gradient: batch label " + std::to_string(y) +
                              " has zero p_emp mass");
        }
        g[static_cast<std::size_t>(y)] +=
            std::min(batch_losses[j], clip) / p_emp[static_cast<std::size_t>(y)] / b;
    }
    return g;
}

double lagrange_alpha(const LabelDistribution& pi, const LabelDistribution& p_emp,
                      const AdversaryConfig& cfg) {
    pi.require_interior();
    p_emp.require_interior();
    return kl_divergence(pi, p_emp) <= cfg.r ? 0.0 : cfg.alpha_active();
}

double mirror_step_size(double alpha, double lambda) {
    return 2.0 * lambda / (1.0 + alpha);
}

LabelDistribution mirror_proximal_update(const AdversaryState& state,
                                         const std::vector<double>& g, double alpha,
                                         const AdversaryConfig& cfg,
                                         std::optional<double> eta_override) {
    state.pi.require_interior();
    state.p_emp.require_interior();
    if (g.size() != state.pi.size()) throw DomainError("mirror_proximal_update: g size mismatch");
    for (double x : g) {
        if (!std::isfinite(x)) throw DomainError("mirror_proximal_update: non-finite gradient");
    }
    const double eta = eta_override.value_or(mirror_step_size(alpha, cfg.lambda));
    const std::size_t n = state.pi.size();
    // log pi_next(i) = (log pi_t(i) + alpha log p_emp(i)) / (1+alpha) + eta g(i) - logC
    std::vector<double> log_w(n);
    double wmax = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
        log_w[i] = (std::log(state.pi[i]) + alpha * std::log(state.p_emp[i])) / (1.0 + alpha) +
                   eta * g[i];
        wmax = std::max(wmax, log_w[i]);
    }
    // Entries far below the max may underflow to exact zero; that is the
    // correct limit of the update, so sum-and-divide here instead of the
    // strict normalize(). The epsilon mixture restores the floor; with
    // epsilon = 0 a degenerate pi surfaces on the next step's interior check.
    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(log_w[i] - wmax);
        sum += w[i];
    }
    for (std::size_t i = 0; i < n; ++i) w[i] /= sum;
    return mix_with_uniform(LabelDistribution::from_probs(std::move(w)), cfg.epsilon);
}

LabelDistribution ema_update(const LabelDistribution& p_emp,
                             const std::vector<int>& batch_labels, double beta) {
    if (batch_labels.empty()) throw DomainError("ema_update: empty batch");
    const double b = static_cast<double>(batch_labels.size());
    std::vector<double> out(p_emp.probs());
    for (double& x : out) x *= beta;
    for (int y : batch_labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= out.size()) {
            throw DomainError("ema_update: label " + std::to_string(y) + " out of range");
        }
        out[static_cast<std::size_t>(y)] += (1.0 - beta) / b;
    }
    return LabelDistribution::from_probs(std::move(out));
}

double proximal_objective(const LabelDistribution& pi, const AdversaryState& state,
                          const std::vector<double>& g, double alpha,
                          const AdversaryConfig& cfg) {
    pi.require_interior();
    if (g.size() != pi.size()) throw DomainError("proximal_objective: g size mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) dot += g[i] * pi[i];
    const double inv_2l = 1.0 / (2.0 * cfg.lambda);
    return alpha * inv_2l * kl_divergence(pi, state.p_emp) +
           inv_2l * kl_divergence(pi, state.pi) - dot;
}

}  // namespace advshift
