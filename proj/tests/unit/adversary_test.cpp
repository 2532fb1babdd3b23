#include <cmath>
#include <vector>

#include "advshift/adversary.hpp"
#include "advshift/errors.hpp"
#include "advshift/rng.hpp"
#include "advshift/simplex.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace advshift;
namespace ts = testsupport;

namespace {

LabelDistribution random_interior(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    for (double& x : w) x = rng.uniform(0.1, 1.1);
    return normalize(w);
}

// Independent re-derivation of the proximal objective, evaluated on raw
// vectors so the grid can score boundary-free points cheaply.
double hand_objective(const std::vector<double>& x, const std::vector<double>& pi_t,
                      const std::vector<double>& p_emp, const std::vector<double>& g,
                      double alpha, double lambda) {
    const double inv2l = 1.0 / (2.0 * lambda);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) {
            s += alpha * inv2l * x[i] * std::log(x[i] / p_emp[i]);
            s += inv2l * x[i] * std::log(x[i] / pi_t[i]);
        }
        s -= g[i] * x[i];
    }
    return s;
}

}  // namespace

TEST_SUITE("adversary") {

TEST_CASE("config validation and the 2*gamma*lambda convention") {
    AdversaryConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.alpha_active() == doctest::Approx(1.0).epsilon(1e-15));

    const AdversaryConfig tied = AdversaryConfig::with_convention(0.1, 5.0);
    CHECK(tied.lambda == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(tied.alpha_active() == doctest::Approx(1.0).epsilon(1e-15));

    AdversaryConfig bad = cfg;
    bad.r = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.epsilon = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.clip = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.gamma_c = 0.0;  // unconstrained limit is allowed
    CHECK_NOTHROW(bad.validate());
}

TEST_CASE("adversarial gradient on the symmetric two-class batch") {
    const LabelDistribution p_emp = LabelDistribution::uniform(2);
    const auto g = adversary_gradient({0, 1}, {1.0, 1.0}, p_emp, 2.0);
    CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("adversarial gradient clips then weights") {
    const LabelDistribution p_emp = LabelDistribution::from_probs({0.5, 0.5});
    const auto g = adversary_gradient({0}, {5.0}, p_emp, 2.0);
    CHECK(g[0] == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(g[1] == 0.0);
}

TEST_CASE("adversarial gradient rejects bad batches") {
    const LabelDistribution p_emp = LabelDistribution::from_probs({1.0, 0.0});
    CHECK_THROWS_AS(adversary_gradient({1}, {1.0}, p_emp, 2.0), DomainError);
    CHECK_THROWS_AS(adversary_gradient({0, 1}, {1.0}, p_emp, 2.0), DomainError);
    CHECK_THROWS_AS(adversary_gradient({}, {}, p_emp, 2.0), DomainError);
    CHECK_THROWS_AS(adversary_gradient({5}, {1.0}, p_emp, 2.0), DomainError);
}

TEST_CASE("minibatch adversarial gradient is unbiased on a finite sample") {
    Rng rng(21, "adv-unbiased");
    const std::size_t n = 20;
    std::vector<int> labels(n);
    std::vector<double> losses(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(rng.uniform_int(3));
        losses[i] = rng.uniform(0.0, 4.0);
    }
    const LabelDistribution p_emp = LabelDistribution::from_probs({0.3, 0.3, 0.4});
    // Expectation under uniform single draws equals the full-sample average.
    const auto exact = adversary_gradient(labels, losses, p_emp, 2.0);

    std::vector<double> mc(3, 0.0);
    const std::size_t batches = 20000;
    const std::size_t b = 5;
    std::vector<int> bl(b);
    std::vector<double> bo(b);
    for (std::size_t t = 0; t < batches; ++t) {
        for (std::size_t k = 0; k < b; ++k) {
            const std::size_t j = rng.uniform_int(n);
            bl[k] = labels[j];
            bo[k] = losses[j];
        }
        const auto g = adversary_gradient(bl, bo, p_emp, 2.0);
        for (std::size_t c = 0; c < 3; ++c) mc[c] += g[c];
    }
    for (double& v : mc) v /= static_cast<double>(batches);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(std::abs(mc[c] - exact[c]) <= 0.03 * std::max(1.0, std::abs(exact[c])));
    }
}

TEST_CASE("lagrange alpha switches on the kl radius") {
    const AdversaryConfig cfg;  // r = 0.1, alpha_active = 1
    const LabelDistribution p_emp = LabelDistribution::uniform(2);
    CHECK(lagrange_alpha(p_emp, p_emp, cfg) == 0.0);

    const LabelDistribution spiked = LabelDistribution::from_probs({0.99, 0.01});
    CHECK(kl_divergence(spiked, p_emp) > cfg.r);
    CHECK(lagrange_alpha(spiked, p_emp, cfg) == doctest::Approx(1.0).epsilon(1e-15));

    // Exact tie takes the interior branch.
    AdversaryConfig r0 = cfg;
    r0.r = 0.0;
    CHECK(kl_divergence(p_emp, p_emp) == 0.0);
    CHECK(lagrange_alpha(p_emp, p_emp, r0) == 0.0);
}

TEST_CASE("alpha switches exactly once along a geodesic crossing the radius") {
    const AdversaryConfig cfg = AdversaryConfig::with_convention(0.15, 2.0);
    const LabelDistribution p_emp = LabelDistribution::from_probs({0.5, 0.3, 0.2});
    const std::vector<double> dir{1.0, -0.4, -0.6};
    int switches = 0;
    double prev = -1.0;
    for (int k = 0; k <= 60; ++k) {
        const double strength = 0.05 * k;
        std::vector<double> w(3);
        for (std::size_t i = 0; i < 3; ++i) w[i] = p_emp[i] * std::exp(strength * dir[i]);
        const LabelDistribution pi = normalize(w);
        const double alpha = lagrange_alpha(pi, p_emp, cfg);
        const double expected =
            kl_divergence(pi, p_emp) <= cfg.r ? 0.0 : cfg.alpha_active();
        CHECK(alpha == expected);
        if (prev >= 0.0 && alpha != prev) ++switches;
        prev = alpha;
    }
    CHECK(switches == 1);
}

TEST_CASE("mirror step size closed form") {
    CHECK(mirror_step_size(0.0, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mirror_step_size(1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mirror_step_size(1.0, 0.1) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("mirror update fixed point and exponentiated-gradient collapse") {
    Rng rng(22, "mirror-basics");
    AdversaryConfig cfg;
    cfg.epsilon = 0.0;
    cfg.lambda = 0.4;

    AdversaryState state;
    state.pi = random_interior(rng, 3);
    state.p_emp = random_interior(rng, 3);

    SUBCASE("g = 0, alpha = 0 returns pi_t") {
        const LabelDistribution next = mirror_proximal_update(state, {0.0, 0.0, 0.0}, 0.0, cfg);
        CHECK(ts::linf_dist(next.probs(), state.pi.probs()) <= 1e-15);
    }
    SUBCASE("alpha = 0 is exponentiated-gradient ascent") {
        const std::vector<double> g{0.9, -0.3, 0.2};
        const LabelDistribution next = mirror_proximal_update(state, g, 0.0, cfg);
        const double eta = mirror_step_size(0.0, cfg.lambda);
        std::vector<double> w(3);
        for (std::size_t i = 0; i < 3; ++i) w[i] = state.pi[i] * std::exp(eta * g[i]);
        const LabelDistribution direct = normalize(w);
        CHECK(ts::linf_dist(next.probs(), direct.probs()) <= 1e-14);
    }
    SUBCASE("eta override replaces the tilt step") {
        const std::vector<double> g{0.9, -0.3, 0.2};
        const LabelDistribution next = mirror_proximal_update(state, g, 0.0, cfg, 0.123);
        std::vector<double> w(3);
        for (std::size_t i = 0; i < 3; ++i) w[i] = state.pi[i] * std::exp(0.123 * g[i]);
        const LabelDistribution direct = normalize(w);
        CHECK(ts::linf_dist(next.probs(), direct.probs()) <= 1e-14);
    }
    SUBCASE("boundary state and non-finite gradients are rejected") {
        AdversaryState bad = state;
        bad.pi = LabelDistribution::from_probs({1.0, 0.0, 0.0});
        CHECK_THROWS_AS(mirror_proximal_update(bad, {0.0, 0.0, 0.0}, 0.0, cfg), DomainError);
        CHECK_THROWS_AS(
            mirror_proximal_update(state, {std::nan(""), 0.0, 0.0}, 0.0, cfg), DomainError);
    }
}

TEST_CASE("mirror update minimizes the proximal objective on a dense grid") {
    // The oracle that pins the tilt step size eta = 2*lambda/(1+alpha):
    // the closed form must land on the grid argmin, and the two rejected
    // step-size variants must not.
    Rng rng(23, "mirror-grid");
    int checked = 0;
    for (double lambda : {0.1, 1.0}) {
        for (double alpha : {0.0, 1.0}) {
            AdversaryConfig cfg;
            cfg.lambda = lambda;
            cfg.epsilon = 0.0;
            AdversaryState state;
            state.pi = random_interior(rng, 3);
            state.p_emp = random_interior(rng, 3);
            std::vector<double> g(3);
            for (double& x : g) x = rng.uniform(-1.0, 1.0);

            const auto objective = [&](const std::vector<double>& x) {
                return hand_objective(x, state.pi.probs(), state.p_emp.probs(), g, alpha,
                                      lambda);
            };
            const ts::GridBest grid = ts::grid_minimize_dense(3, 2000, true, objective);

            const LabelDistribution closed = mirror_proximal_update(state, g, alpha, cfg);
            CHECK(ts::l1_dist(closed.probs(), grid.point) <= 2e-3);
            CHECK(objective(closed.probs()) <= grid.value + 1e-6);
            CHECK(proximal_objective(closed, state, g, alpha, cfg) <=
                  proximal_objective(LabelDistribution::from_probs(grid.point), state, g,
                                     alpha, cfg) +
                      1e-6);

            // Both circulating alternatives lose against the grid once they
            // differ from the exact step (at alpha = 0 the first coincides).
            const double eta1 = 2.0 * lambda / ((1.0 + alpha) * (1.0 + alpha));
            const double eta2 = lambda / ((1.0 + alpha) * (1.0 + alpha));
            if (alpha > 0.0) {
                const LabelDistribution v1 = mirror_proximal_update(state, g, alpha, cfg, eta1);
                CHECK(objective(v1.probs()) > grid.value + 1e-6);
            }
            const LabelDistribution v2 = mirror_proximal_update(state, g, alpha, cfg, eta2);
            CHECK(objective(v2.probs()) > grid.value + 1e-6);
            ++checked;
        }
    }
    CHECK(checked == 4);
}

TEST_CASE("mirror update never decreases the penalized payoff at fixed g") {
    Rng rng(24, "mirror-ascent");
    for (int t = 0; t < 20; ++t) {
        AdversaryConfig cfg;
        cfg.lambda = rng.uniform(0.1, 1.0);
        cfg.epsilon = 0.0;
        const double alpha = (t % 2 == 0) ? 0.0 : rng.uniform(0.2, 2.0);
        AdversaryState state;
        state.pi = random_interior(rng, 4);
        state.p_emp = random_interior(rng, 4);
        std::vector<double> g(4);
        for (double& x : g) x = rng.uniform(-1.5, 1.5);

        const auto payoff = [&](const LabelDistribution& pi) {
            double dot = 0.0;
            for (std::size_t i = 0; i < 4; ++i) dot += g[i] * pi[i];
            return dot - alpha / (2.0 * cfg.lambda) * kl_divergence(pi, state.p_emp);
        };
        const LabelDistribution next = mirror_proximal_update(state, g, alpha, cfg);
        CHECK(payoff(next) >= payoff(state.pi) - 1e-9);
    }
}

TEST_CASE("mirror update keeps the epsilon entry floor") {
    Rng rng(25, "mirror-floor");
    AdversaryConfig cfg;
    cfg.epsilon = 0.05;
    for (int t = 0; t < 20; ++t) {
        AdversaryState state;
        state.pi = random_interior(rng, 5);
        state.p_emp = random_interior(rng, 5);
        std::vector<double> g(5);
        for (double& x : g) x = rng.uniform(-20.0, 20.0);
        const LabelDistribution next = mirror_proximal_update(state, g, 1.0, cfg);
        CHECK(next.min_entry() >= cfg.epsilon / 5.0 - 1e-15);
        double sum = 0.0;
        for (std::size_t i = 0; i < 5; ++i) sum += next[i];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("proximal objective satisfies the three-point inequality at the update") {
    Rng rng(26, "three-point");
    for (int t = 0; t < 10; ++t) {
        AdversaryConfig cfg;
        cfg.lambda = rng.uniform(0.2, 1.0);
        cfg.epsilon = 0.0;
        const double alpha = rng.uniform(0.0, 1.5);
        AdversaryState state;
        state.pi = random_interior(rng, 3);
        state.p_emp = random_interior(rng, 3);
        std::vector<double> g(3);
        for (double& x : g) x = rng.uniform(-1.0, 1.0);

        const LabelDistribution star = mirror_proximal_update(state, g, alpha, cfg);
        const double j_star = proximal_objective(star, state, g, alpha, cfg);
        for (int probe = 0; probe < 20; ++probe) {
            const LabelDistribution x = random_interior(rng, 3);
            const double j_x = proximal_objective(x, state, g, alpha, cfg);
            CHECK(j_x >= j_star + kl_divergence(x, star) / (2.0 * cfg.lambda) - 1e-6);
        }
    }
}

TEST_CASE("proximal objective basics") {
    Rng rng(27, "objective-basics");
    AdversaryConfig cfg;
    cfg.lambda = 0.5;
    AdversaryState state;
    state.pi = random_interior(rng, 3);
    state.p_emp = random_interior(rng, 3);

    CHECK(proximal_objective(state.pi, state, {0.0, 0.0, 0.0}, 0.0, cfg) == 0.0);

    std::vector<double> g(3);
    for (double& x : g) x = rng.uniform(-1.0, 1.0);
    const LabelDistribution pi = random_interior(rng, 3);
    const double base = proximal_objective(pi, state, g, 0.7, cfg);
    std::vector<double> shifted = g;
    for (double& x : shifted) x += 2.5;
    CHECK(proximal_objective(pi, state, shifted, 0.7, cfg) ==
          doctest::Approx(base - 2.5).epsilon(1e-12));
    // The argmin is unchanged by the shift.
    cfg.epsilon = 0.0;
    const LabelDistribution a = mirror_proximal_update(state, g, 0.7, cfg);
    const LabelDistribution b = mirror_proximal_update(state, shifted, 0.7, cfg);
    CHECK(ts::linf_dist(a.probs(), b.probs()) <= 1e-12);

    const LabelDistribution boundary = LabelDistribution::from_probs({0.5, 0.5, 0.0});
    CHECK_THROWS_AS(proximal_objective(boundary, state, g, 0.0, cfg), DomainError);
}

TEST_CASE("ema update algebra") {
    const LabelDistribution p = LabelDistribution::from_probs({0.5, 0.3, 0.2});

    const LabelDistribution same = ema_update(p, {0, 1, 2}, 1.0);
    CHECK(ts::linf_dist(same.probs(), p.probs()) <= 1e-15);

    const LabelDistribution hist = ema_update(p, {0, 0}, 0.0);
    CHECK(hist[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(hist[1] == 0.0);

    const LabelDistribution mixed = ema_update(p, {0, 1}, 0.9);
    CHECK(mixed[0] == doctest::Approx(0.9 * 0.5 + 0.1 * 0.5).epsilon(1e-15));
    CHECK(mixed[1] == doctest::Approx(0.9 * 0.3 + 0.1 * 0.5).epsilon(1e-15));
    CHECK(mixed[2] == doctest::Approx(0.9 * 0.2).epsilon(1e-15));

    CHECK_THROWS_AS(ema_update(p, {}, 0.5), DomainError);
    CHECK_THROWS_AS(ema_update(p, {7}, 0.5), DomainError);
}

TEST_CASE("ema tracks the generator marginal over long runs") {
    Rng rng(28, "ema-track");
    const std::vector<double> q{0.5, 0.3, 0.2};
    std::vector<double> cum{0.5, 0.8, 1.0};
    LabelDistribution p_emp = LabelDistribution::uniform(3);
    const std::size_t steps = 10000;
    const std::size_t b = 16;
    std::vector<int> batch(b);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t k = 0; k < b; ++k)
            batch[k] = static_cast<int>(rng.categorical(cum));
        p_emp = ema_update(p_emp, batch, 0.999);
    }
    CHECK(ts::linf_dist(p_emp.probs(), q) <= 0.02);
}

}  // TEST_SUITE
