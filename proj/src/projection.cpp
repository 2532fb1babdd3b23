#include "advshift/projection.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include "advshift/adversary.hpp"
#include "advshift/errors.hpp"
#include "advshift/rng.hpp"

namespace advshift {

namespace {

constexpr double kRelViolation = 1e-2;
constexpr double kStationaryTol = 1e-7;
constexpr int kInnerMax = 20000;

double kl_excess(const LabelDistribution& q, const LabelDistribution& p_ref, double r) {
    return std::max(0.0, kl_divergence(q, p_ref) - r);
}

double penalized_objective(const LabelDistribution& q, const std::vector<double>& p,
                           const LabelDistribution& p_ref, double r, double mu) {
    double dist = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = q[i] - p[i];
        dist += d * d;
    }
    const double h = kl_excess(q, p_ref, r);
    return dist + mu * h * h;
}

// grad = 2(q - p) + 2 mu h gradKL, gradKL_i = log(q_i/p_ref_i) + 1.
// Entries at the simplex boundary are clamped before the log; the penalty
// then pushes them back inside on the next step.
void penalized_gradient(const LabelDistribution& q, const std::vector<double>& p,
                        const LabelDistribution& p_ref, double r, double mu,
                        std::vector<double>& grad) {
    const double h = kl_excess(q, p_ref, r);
    for (std::size_t i = 0; i < p.size(); ++i) {
        grad[i] = 2.0 * (q[i] - p[i]);
        if (h > 0.0) {
            const double qi = std::max(q[i], kInteriorFloor);
            grad[i] += 2.0 * mu * h * (std::log(qi / p_ref[i]) + 1.0);
        }
    }
}

// Projected gradient descent with backtracking on the penalized objective.
LabelDistribution pgd_stage(LabelDistribution q, const std::vector<double>& p,
                            const LabelDistribution& p_ref, double r, double mu) {
    std::vector<double> grad(p.size());
    std::vector<double> trial(p.size());
    double step = 1.0;
    double fq = penalized_objective(q, p, p_ref, r, mu);
    for (int it = 0; it < kInnerMax; ++it) {
        penalized_gradient(q, p, p_ref, r, mu, grad);
        step = std::min(step * 2.0, 1.0);
        while (true) {
            for (std::size_t i = 0; i < p.size(); ++i) trial[i] = q[i] - step * grad[i];
            LabelDistribution q_new = euclidean_project_simplex(trial);
            double inner = 0.0;
            double move2 = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double d = q_new[i] - q[i];
                inner += grad[i] * d;
                move2 += d * d;
            }
            const double f_new = penalized_objective(q_new, p, p_ref, r, mu);
            if (f_new <= fq + inner + 0.5 * move2 / step) {
                const double residual = std::sqrt(move2) / step;
                q = std::move(q_new);
                fq = f_new;
                if (residual <= kStationaryTol) return q;
                break;
            }
            step *= 0.5;
            if (step < 1e-16) return q;  // flat to machine precision
        }
    }
    return q;
}

}  // namespace

LabelDistribution kl_ball_project(const std::vector<double>& p, const LabelDistribution& p_ref,
                                  double r) {
    if (p.size() != p_ref.size()) throw ShapeError("kl_ball_project: size mismatch");
    if (!(r > 0.0)) throw DomainError("kl_ball_project: r must be positive");
    p_ref.require_interior("kl_ball_project p_ref");

    LabelDistribution q = euclidean_project_simplex(p);
    if (kl_divergence(q, p_ref) <= r) return q;  // constraint slack

    const double tol = std::min(1e-4, 0.5 * kRelViolation * r);
    for (double mu = 10.0; mu <= 1e13; mu *= 10.0) {
        q = pgd_stage(std::move(q), p, p_ref, r, mu);
        if (kl_excess(q, p_ref, r) <= tol) break;
    }
    const double violation = kl_excess(q, p_ref, r);
    if (violation > kRelViolation * r) {
        throw NonConvergence("kl_ball_project: KL excess " + std::to_string(violation) +
                             " above " + std::to_string(kRelViolation * r));
    }
    return q;
}

ProjectionBenchmark projection_benchmark(std::size_t n_classes, std::size_t trials,
                                         std::uint64_t seed) {
    ProjectionBenchmark bench;
    bench.n_classes = n_classes;
    bench.trials = trials;
    if (trials == 0) return bench;
    if (n_classes < 2) throw DomainError("projection_benchmark: need at least 2 classes");

    Rng rng(stream_seed(seed, "projection-bench"));
    AdversaryConfig cfg;
    const double r = cfg.r;

    std::vector<double> proj_ms;
    std::vector<double> mirror_ms;
    proj_ms.reserve(trials);
    mirror_ms.reserve(trials);

    std::vector<double> ref_w(n_classes);
    std::vector<double> point(n_classes);
    std::vector<double> g(n_classes);
    using clock = std::chrono::steady_clock;

    for (std::size_t t = 0; t < trials; ++t) {
        for (double& w : ref_w) w = rng.uniform(0.5, 1.5);
        const LabelDistribution p_ref = normalize(ref_w);
        // A concentrated target point, far enough out that the ball binds.
        for (double& x : point) x = std::exp(2.0 * rng.normal());
        double s = 0.0;
        for (double x : point) s += x;
        for (double& x : point) x /= s;

        const auto t0 = clock::now();
        LabelDistribution q = kl_ball_project(point, p_ref, r);
        const auto t1 = clock::now();
        proj_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        (void)q;

        for (double& x : g) x = rng.uniform(0.0, cfg.clip);
        const AdversaryState state{p_ref, p_ref, 0};
        const auto t2 = clock::now();
        LabelDistribution next = mirror_proximal_update(state, g, cfg.alpha_active(), cfg);
        const auto t3 = clock::now();
        mirror_ms.push_back(std::chrono::duration<double, std::milli>(t3 - t2).count());
        (void)next;
    }

    auto median = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    bench.median_projection_ms = median(proj_ms);
    bench.median_mirror_ms = median(mirror_ms);
    bench.ratio = bench.median_mirror_ms > 0.0
                      ? bench.median_projection_ms / bench.median_mirror_ms
                      : std::numeric_limits<double>::infinity();
    return bench;
}

void save_benchmark_csv(const ProjectionBenchmark& bench, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << "L,trials,median_projection_ms,median_mirror_ms,ratio\n";
    if (bench.trials > 0) {
        auto fmt = [](double v) {
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof(buf), v);
            return std::string(buf, res.ptr);
        };
        out << bench.n_classes << ',' << bench.trials << ',' << fmt(bench.median_projection_ms)
            << ',' << fmt(bench.median_mirror_ms) << ',' << fmt(bench.ratio) << "\n";
    }
    if (!out) throw ParseError("failed writing '" + path + "'");
}

}  // namespace advshift
