#include "advshift/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "advshift/errors.hpp"
#include "advshift/rng.hpp"

namespace advshift {

namespace {

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double l2_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Per-class mean clipped loss profile over the full sample.
ErrorProfile clipped_loss_profile(const ModelParams& params, const Dataset& data, double clip) {
    const std::size_t L = data.n_classes();
    ErrorProfile profile;
    profile.values.assign(L, 0.0);
    profile.counts.assign(L, 0);
    for (const Example& ex : data.examples()) {
        profile.values[static_cast<std::size_t>(ex.label)] +=
            std::min(per_example_loss(params, ex), clip);
        ++profile.counts[static_cast<std::size_t>(ex.label)];
    }
    for (std::size_t c = 0; c < L; ++c) {
        if (profile.counts[c] == 0)
            throw DomainError("clipped loss profile: class " + std::to_string(c) + " empty");
        profile.values[c] /= static_cast<double>(profile.counts[c]);
    }
    profile.reference = data.empirical_marginal();
    return profile;
}

}  // namespace

void DiagnosticsReport::validate() const {
    auto check = [](double v, const char* name) {
        if (!(v >= 0.0) || std::isnan(v))
            throw DomainError(std::string("DiagnosticsReport: ") + name + " negative or NaN");
    };
    check(sigma_hat, "sigma_hat");
    check(g_hat, "g_hat");
    check(g_bound, "g_bound");
    check(lipschitz_hat, "lipschitz_hat");
    check(smooth_hat, "smooth_hat");
    check(r_hat, "r_hat");
    check(r_bound, "r_bound");
    if (!std::isfinite(sigma_hat) || !std::isfinite(g_hat) || !std::isfinite(lipschitz_hat) ||
        !std::isfinite(smooth_hat) || !std::isfinite(r_hat))
        throw DomainError("DiagnosticsReport: non-finite estimate");
    for (double m : moreau_trace) check(m, "moreau_trace entry");
}

double robust_objective(const ModelParams& params, const Dataset& data,
                        const AdversaryConfig& cfg) {
    return inner_max_penalized(clipped_loss_profile(params, data, cfg.clip), cfg).value;
}

std::vector<double> robust_objective_gradient(const ModelParams& params, const Dataset& data,
                                              const AdversaryConfig& cfg) {
    const ErrorProfile profile = clipped_loss_profile(params, data, cfg.clip);
    const LabelDistribution witness = inner_max_penalized(profile, cfg).witness;
    std::vector<double> acc(params.weights.size(), 0.0);
    for (const Example& ex : data.examples()) {
        if (per_example_loss(params, ex) >= cfg.clip) continue;  // flat above the clip
        const auto y = static_cast<std::size_t>(ex.label);
        const double w = witness[y] / static_cast<double>(profile.counts[y]);
        if (w == 0.0) continue;
        const std::vector<double> g = loss_gradient(params, ex);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += w * g[k];
    }
    return acc;
}

double moreau_stationarity(const ModelParams& params, const Dataset& data,
                           const AdversaryConfig& cfg, double l_hat) {
    if (!(l_hat > 0.0)) throw DomainError("moreau_stationarity: l_hat must be positive");
    constexpr double kGradTol = 1e-6;
    constexpr int kMaxIter = 200000;

    ModelParams w = params;
    auto objective = [&](const ModelParams& v) {
        const double d = l2_dist(v.weights, params.weights);
        return robust_objective(v, data, cfg) + l_hat * d * d;
    };

    double fw = objective(w);
    double step = 1.0 / (2.0 * l_hat);
    double grad_norm = 0.0;
    std::vector<double> grad;
    ModelParams trial = w;

    for (int it = 0; it < kMaxIter; ++it) {
        grad = robust_objective_gradient(w, data, cfg);
        for (std::size_t k = 0; k < grad.size(); ++k)
            grad[k] += 2.0 * l_hat * (w.weights[k] - params.weights[k]);
        grad_norm = l2_norm(grad);
        if (grad_norm <= kGradTol) break;

        step = std::min(step * 2.0, 1.0 / l_hat);
        bool accepted = false;
        while (step >= 1e-18) {
            for (std::size_t k = 0; k < grad.size(); ++k)
                trial.weights[k] = w.weights[k] - step * grad[k];
            const double ft = objective(trial);
            if (ft <= fw - 1e-4 * step * grad_norm * grad_norm) {
                std::swap(w.weights, trial.weights);
                fw = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        // No step improves the prox objective at double precision: w is the
        // numerical prox point even if the raw gradient norm is large, which
        // happens whenever F has a kink under the quadratic.
        if (!accepted) break;
    }
    return 2.0 * l_hat * l2_dist(params.weights, w.weights);
}

DiagnosticsReport estimate_assumption_constants(const TrainResult& result, const Dataset& data,
                                                const TrainConfig& cfg, std::size_t samples,
                                                std::uint64_t seed) {
    if (result.history.epochs.empty()) throw DomainError("diagnostics: empty history");
    if (samples == 0) throw DomainError("diagnostics: samples must be positive");

    DiagnosticsReport report;
    const ModelParams& params = result.params;
    const LabelDistribution& pi = result.adversary.pi;
    const LabelDistribution& p_emp = result.adversary.p_emp;

    const auto full_grad = weighted_theta_gradient(data.examples(), pi, p_emp, params);

    Rng batch_rng(stream_seed(seed, "diag-batches"));
    std::vector<Example> batch(cfg.batch_size);
    std::vector<int> labels(cfg.batch_size);
    std::vector<double> losses(cfg.batch_size);
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t k = 0; k < cfg.batch_size; ++k) {
            batch[k] = data.examples()[batch_rng.uniform_int(data.size())];
            labels[k] = batch[k].label;
        }
        const auto g_theta = weighted_theta_gradient(batch, pi, p_emp, params);
        report.sigma_hat = std::max(report.sigma_hat, l2_dist(g_theta, full_grad));

        for (std::size_t k = 0; k < cfg.batch_size; ++k)
            losses[k] = per_example_loss(params, batch[k]);
        const auto g_pi = adversary_gradient(labels, losses, p_emp, cfg.adversary.clip);
        for (double v : g_pi) report.g_hat = std::max(report.g_hat, std::abs(v));
    }
    report.g_bound = cfg.adversary.clip / p_emp.min_entry();

    // Secant estimates of the per-example loss's Lipschitz and smoothness
    // constants near the trained parameters.
    Rng pair_rng(stream_seed(seed, "diag-secants"));
    ModelParams w1 = params;
    ModelParams w2 = params;
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t k = 0; k < params.weights.size(); ++k) {
            w1.weights[k] = params.weights[k] + 0.5 * pair_rng.uniform(-1.0, 1.0);
            w2.weights[k] = params.weights[k] + 0.5 * pair_rng.uniform(-1.0, 1.0);
        }
        const double dist = l2_dist(w1.weights, w2.weights);
        if (dist < 1e-9) continue;
        const Example& ex = data.examples()[pair_rng.uniform_int(data.size())];
        const double df = std::abs(per_example_loss(w1, ex) - per_example_loss(w2, ex));
        report.lipschitz_hat = std::max(report.lipschitz_hat, df / dist);
        const std::vector<double> g1 = loss_gradient(w1, ex);
        const std::vector<double> g2 = loss_gradient(w2, ex);
        report.smooth_hat = std::max(report.smooth_hat, l2_dist(g1, g2) / dist);
    }

    for (const EpochRecord& rec : result.history.epochs)
        report.r_hat = std::max(report.r_hat, rec.kl_pi_pemp);
    report.r_bound = cfg.adversary.epsilon > 0.0
                         ? std::log(static_cast<double>(data.n_classes()) /
                                    cfg.adversary.epsilon)
                         : std::numeric_limits<double>::infinity();
    report.validate();
    return report;
}

KlRecursionReport kl_recursion_check(std::size_t trials, std::size_t probes, std::uint64_t seed,
                                     double tol, bool plant_violation) {
    if (trials == 0 || probes == 0)
        throw DomainError("kl_recursion_check: trials and probes must be positive");
    Rng rng(stream_seed(seed, "kl-recursion"));

    KlRecursionReport report;
    report.trials = trials;
    report.probes = probes;
    report.worst_gap = std::numeric_limits<double>::infinity();

    AdversaryConfig prox;
    prox.lambda = 0.5;  // makes the mirror step weight the prox KL by exactly 1
    prox.epsilon = 0.0;

    auto random_interior = [&rng](std::size_t L) {
        std::vector<double> w(L);
        for (double& x : w) x = rng.uniform(0.2, 1.8);
        return normalize(w);
    };

    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t L = (t % 2 == 0) ? 3 : 5;
        const LabelDistribution x0 = random_interior(L);
        const LabelDistribution q = random_interior(L);
        std::vector<double> c(L);
        for (double& v : c) v = rng.uniform(-1.0, 1.0);
        const double a = rng.uniform(0.0, 2.0);

        auto ell = [&](const LabelDistribution& x) {
            double s = 0.0;
            for (std::size_t i = 0; i < L; ++i) s += c[i] * x[i];
            return s + a * kl_divergence(x, q);
        };

        // argmin of <c,x> + a KL(x||q) + KL(x||x0): the mirror update with
        // gradient -c, penalty weight a and unit prox weight.
        std::vector<double> neg_c(L);
        for (std::size_t i = 0; i < L; ++i) neg_c[i] = -c[i];
        const AdversaryState anchor{x0, q, 0};
        LabelDistribution x_star = mirror_proximal_update(anchor, neg_c, a, prox);
        if (plant_violation) {
            std::vector<double> bent = x_star.probs();
            bent[0] *= 1.5;
            x_star = normalize(bent);
        }
        const double base = ell(x_star) + kl_divergence(x_star, x0);

        for (std::size_t p = 0; p < probes; ++p) {
            // In plant mode the first probe is the true argmin, where the
            // perturbed point must fail the inequality.
            LabelDistribution x_probe = (plant_violation && p == 0)
                                            ? mirror_proximal_update(anchor, neg_c, a, prox)
                                            : random_interior(L);
            const double lhs = ell(x_probe) + kl_divergence(x_probe, x0);
            const double slack = lhs - base - kl_divergence(x_probe, x_star);
            report.worst_gap = std::min(report.worst_gap, slack);
            if (slack < -tol) ++report.violations;
        }
    }
    return report;
}

TrainConfig theory_schedule(TrainConfig base, std::size_t total_steps,
                            std::size_t dataset_size) {
    if (total_steps == 0) throw ConfigError("theory_schedule: total_steps must be positive");
    if (dataset_size == 0) throw ConfigError("theory_schedule: dataset_size must be positive");
    const double T = static_cast<double>(total_steps);
    base.theta_lr = std::pow(T, -0.75);
    base.adversary.lambda = std::pow(T, -0.25);
    const auto batch = static_cast<std::size_t>(std::llround(std::sqrt(T)));
    base.batch_size = std::clamp<std::size_t>(batch, 1, dataset_size);
    const std::size_t per_epoch = dataset_size / base.batch_size;
    if (per_epoch == 0) throw ConfigError("theory_schedule: batch exceeds dataset");
    base.epochs = (total_steps + per_epoch - 1) / per_epoch;
    return base;
}

void save_report(const DiagnosticsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    auto fmt = [](double v) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    };
    out << "sigma_hat = " << fmt(report.sigma_hat) << "\n";
    out << "g_hat = " << fmt(report.g_hat) << "\n";
    out << "g_bound = " << fmt(report.g_bound) << "\n";
    out << "lipschitz_hat = " << fmt(report.lipschitz_hat) << "\n";
    out << "smooth_hat = " << fmt(report.smooth_hat) << "\n";
    out << "r_hat = " << fmt(report.r_hat) << "\n";
    out << "r_bound = " << fmt(report.r_bound) << "\n";
    for (std::size_t i = 0; i < report.moreau_trace.size(); ++i)
        out << "moreau_" << i << " = " << fmt(report.moreau_trace[i]) << "\n";
    if (!out) throw ParseError("failed writing '" + path + "'");
}

}  // namespace advshift
