#include "advshift/simplex.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <string>

#include "advshift/errors.hpp"

namespace advshift {

namespace {

double checked_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

// std::to_string flattens tiny magnitudes to "0.000000"; shortest round-trip
// form keeps them readable in error messages.
std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

LabelDistribution LabelDistribution::uniform(std::size_t n_classes) {
    if (n_classes == 0) throw DomainError("uniform: zero classes");
    return LabelDistribution(std::vector<double>(n_classes, 1.0 / static_cast<double>(n_classes)));
}

LabelDistribution LabelDistribution::point_mass(std::size_t n_classes, std::size_t index) {
    if (index >= n_classes) throw DomainError("point_mass: index out of range");
    std::vector<double> p(n_classes, 0.0);
    p[index] = 1.0;
    return LabelDistribution(std::move(p));
}

LabelDistribution LabelDistribution::from_probs(std::vector<double> probs) {
    if (probs.empty()) throw DomainError("from_probs: empty vector");
    for (double x : probs) {
        if (!std::isfinite(x)) throw DomainError("from_probs: non-finite entry");
        if (x < 0.0) throw DomainError("from_probs: negative entry " + num(x));
    }
    const double s = checked_sum(probs);
    if (std::abs(s - 1.0) > kSimplexSumTol) {
        throw DomainError("from_probs: entries sum to " + num(s) + ", not 1");
    }
    return LabelDistribution(std::move(probs));
}

double LabelDistribution::min_entry() const {
    if (probs_.empty()) throw DomainError("min_entry: empty distribution");
    return *std::min_element(probs_.begin(), probs_.end());
}

bool LabelDistribution::is_interior(double floor) const { return min_entry() >= floor; }

void LabelDistribution::require_interior(double floor) const {
    if (!is_interior(floor)) {
        throw DomainError("distribution has entry " + num(min_entry()) +
                          " below interior floor " + num(floor));
    }
}

void LabelDistribution::require_interior(const char* what, double floor) const {
    if (!is_interior(floor)) {
        throw DomainError(std::string(what) + ": entry " + num(min_entry()) +
                          " below interior floor " + num(floor));
    }
}

double kl_divergence(const LabelDistribution& p, const LabelDistribution& q) {
    if (p.size() != q.size()) throw DomainError("kl_divergence: size mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;  // 0 log(0/q) := 0
        if (q[i] <= 0.0) {
            throw DomainError("kl_divergence: p(" + std::to_string(i) +
                              ") > 0 with q(" + std::to_string(i) + ") = 0");
        }
        kl += p[i] * std::log(p[i] / q[i]);
    }
    // Clamp the tiny negative values float summation can leave at p ~ q.
    return std::max(kl, 0.0);
}

LabelDistribution normalize(const std::vector<double>& weights) {
    if (weights.empty()) throw DomainError("normalize: empty vector");
    double s = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w <= 0.0) {
            throw DomainError("normalize: entries must be positive and finite, got " +
                              num(w));
        }
        s += w;
    }
    std::vector<double> out(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) out[i] = weights[i] / s;
    return LabelDistribution::from_probs(std::move(out));
}

LabelDistribution mix_with_uniform(const LabelDistribution& p, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) {
        throw DomainError("mix_with_uniform: epsilon must be in [0,1), got " +
                          num(epsilon));
    }
    if (epsilon == 0.0) return p;
    const double u = epsilon / static_cast<double>(p.size());
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = (1.0 - epsilon) * p[i] + u;
    return LabelDistribution::from_probs(std::move(out));
}

LabelDistribution euclidean_project_simplex(const std::vector<double>& v) {
    if (v.empty()) throw DomainError("euclidean_project_simplex: empty vector");
    for (double x : v) {
        if (!std::isfinite(x)) throw DomainError("euclidean_project_simplex: non-finite entry");
    }
    // Sort descending, find the largest k with u_k + (1 - sum_{j<=k} u_j)/k > 0.
    std::vector<double> u(v);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumulative = 0.0;
    double theta = 0.0;
    std::size_t k = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (1.0 - cumulative) / static_cast<double>(j + 1);
        if (u[j] + t > 0.0) {
            theta = t;
            k = j + 1;
        }
    }
    (void)k;
    std::vector<double> out(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::max(v[i] + theta, 0.0);
        s += out[i];
    }
    for (double& x : out) x /= s;  // kill residual float drift
    return LabelDistribution::from_probs(std::move(out));
}

LabelDistribution exponential_tilt(const LabelDistribution& p,
                                   const std::vector<double>& scores, double lambda) {
    if (scores.size() != p.size()) throw DomainError("exponential_tilt: size mismatch");
    if (!(lambda > 0.0)) throw DomainError("exponential_tilt: lambda must be positive");
    p.require_interior();
    for (double s : scores) {
        if (!std::isfinite(s)) throw DomainError("exponential_tilt: non-finite score");
    }
    const double smax = *std::max_element(scores.begin(), scores.end());
    // Normalized inline rather than via normalize(): at extreme lambda the
    // dominated entries underflow to exact zero, which is the correct limit.
    std::vector<double> w(p.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        w[i] = p[i] * std::exp((scores[i] - smax) / lambda);
        sum += w[i];
    }
    for (double& x : w) x /= sum;
    return LabelDistribution::from_probs(std::move(w));
}

}  // namespace advshift
