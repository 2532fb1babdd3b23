#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace testsupport {

namespace {

// Entries this small count as boundary for log-bearing objectives.
constexpr double kBoundaryFloor = 1e-9;

void recurse_simplex(std::size_t coord, std::size_t remaining, std::size_t denominator,
                     std::vector<double>& x,
                     const std::function<void(const std::vector<double>&)>& fn) {
    const std::size_t last = x.size() - 1;
    if (coord == last) {
        x[coord] = static_cast<double>(remaining) / static_cast<double>(denominator);
        fn(x);
        return;
    }
    for (std::size_t k = 0; k <= remaining; ++k) {
        x[coord] = static_cast<double>(k) / static_cast<double>(denominator);
        recurse_simplex(coord + 1, remaining - k, denominator, x, fn);
    }
}

bool has_boundary_entry(const std::vector<double>& x) {
    for (double v : x)
        if (v < kBoundaryFloor) return true;
    return false;
}

struct BoxScanResult {
    GridBest best;
    bool edge = false;  // best point sits on a radius-limited box edge
};

// Scan the lattice center[i] + k_i * pitch over the free coordinates
// 0..L-2 with |k_i| <= span (clamped to [0,1]); the last coordinate is the
// slack 1 - sum.
BoxScanResult scan_box(const std::vector<double>& center, double radius, double pitch,
                       bool skip_boundary, const ScalarFn& fn) {
    const std::size_t L = center.size();
    const std::size_t free_n = L - 1;
    std::vector<long> kmin(free_n), kmax(free_n);
    std::vector<bool> lo_by_radius(free_n), hi_by_radius(free_n);
    for (std::size_t i = 0; i < free_n; ++i) {
        const double lo = std::max(0.0, center[i] - radius);
        const double hi = std::min(1.0, center[i] + radius);
        lo_by_radius[i] = center[i] - radius > 0.0;
        hi_by_radius[i] = center[i] + radius < 1.0;
        kmin[i] = static_cast<long>(std::ceil((lo - center[i]) / pitch - 1e-12));
        kmax[i] = static_cast<long>(std::floor((hi - center[i]) / pitch + 1e-12));
    }

    BoxScanResult out;
    out.best.value = std::numeric_limits<double>::infinity();
    std::vector<double> x(L);
    std::vector<long> k(free_n, 0);

    std::function<void(std::size_t, double)> walk = [&](std::size_t i, double sum) {
        if (i == free_n) {
            const double slack = 1.0 - sum;
            if (slack < -1e-12) return;
            x[L - 1] = std::max(0.0, slack);
            if (skip_boundary && has_boundary_entry(x)) return;
            const double v = fn(x);
            if (v < out.best.value) {
                out.best.value = v;
                out.best.point = x;
                out.edge = false;
                for (std::size_t j = 0; j < free_n; ++j) {
                    if ((k[j] == kmin[j] && lo_by_radius[j]) ||
                        (k[j] == kmax[j] && hi_by_radius[j]))
                        out.edge = true;
                }
            }
            return;
        }
        for (long kk = kmin[i]; kk <= kmax[i]; ++kk) {
            const double xi = center[i] + static_cast<double>(kk) * pitch;
            if (xi < 0.0 || sum + xi > 1.0 + 1e-12) continue;
            k[i] = kk;
            x[i] = xi;
            walk(i + 1, sum + xi);
        }
    };
    walk(0, 0.0);
    return out;
}

}  // namespace

void for_each_simplex_point(std::size_t n_classes, std::size_t denominator,
                            const std::function<void(const std::vector<double>&)>& fn) {
    if (n_classes == 0 || denominator == 0)
        throw std::invalid_argument("for_each_simplex_point: empty grid");
    std::vector<double> x(n_classes, 0.0);
    recurse_simplex(0, denominator, denominator, x, fn);
}

GridBest grid_minimize_dense(std::size_t n_classes, std::size_t denominator, bool skip_boundary,
                             const ScalarFn& fn) {
    GridBest best;
    best.value = std::numeric_limits<double>::infinity();
    for_each_simplex_point(n_classes, denominator, [&](const std::vector<double>& x) {
        if (skip_boundary && has_boundary_entry(x)) return;
        const double v = fn(x);
        if (v < best.value) {
            best.value = v;
            best.point = x;
        }
    });
    if (best.point.empty()) throw std::runtime_error("grid_minimize_dense: empty feasible grid");
    return best;
}

GridBest grid_minimize_zoom(std::size_t n_classes, double coarse_step, double final_step,
                            bool skip_boundary, const ScalarFn& fn) {
    const auto denom = static_cast<std::size_t>(std::ceil(1.0 / coarse_step));
    GridBest best = grid_minimize_dense(n_classes, denom, skip_boundary, fn);
    double pitch = 1.0 / static_cast<double>(denom);
    while (pitch > final_step) {
        const double next = std::max(final_step, pitch / 5.0);
        double radius = 2.5 * pitch;
        for (int attempt = 0; attempt < 7; ++attempt) {
            BoxScanResult scan = scan_box(best.point, radius, next, skip_boundary, fn);
            const bool improved = scan.best.value < best.value;
            if (improved) best = scan.best;
            if (!scan.edge) break;
            radius *= 2.0;
        }
        pitch = next;
    }
    return best;
}

std::vector<double> grid_constrained_max(const std::vector<double>& e,
                                         const std::vector<double>& p_ref,
                                         const std::vector<double>& taus,
                                         std::size_t denominator) {
    std::vector<double> best(taus.size(), -std::numeric_limits<double>::infinity());
    for_each_simplex_point(e.size(), denominator, [&](const std::vector<double>& x) {
        double payoff = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) payoff += x[i] * e[i];
        bool need_kl = false;
        for (std::size_t t = 0; t < taus.size(); ++t)
            if (payoff > best[t]) need_kl = true;
        if (!need_kl) return;
        const double kl = hand_kl(x, p_ref);
        for (std::size_t t = 0; t < taus.size(); ++t)
            if (kl <= taus[t] && payoff > best[t]) best[t] = payoff;
    });
    return best;
}

double hand_kl(const std::vector<double>& p, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
    }
    return s;
}

double l1_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

double l2_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double linf_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

std::vector<double> fd_gradient(const ScalarFn& f, const std::vector<double>& x, double h) {
    std::vector<double> g(x.size());
    std::vector<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

std::vector<double> confusion_error_rates(const advshift::ModelParams& params,
                                          const advshift::Dataset& data) {
    const std::size_t L = data.n_classes();
    std::vector<std::vector<std::size_t>> confusion(L, std::vector<std::size_t>(L, 0));
    for (const advshift::Example& ex : data.examples()) {
        const std::vector<double> z = advshift::model_logits(params, ex.features);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < z.size(); ++c)
            if (z[c] > z[arg]) arg = c;
        ++confusion[static_cast<std::size_t>(ex.label)][arg];
    }
    std::vector<double> rates(L, 0.0);
    for (std::size_t y = 0; y < L; ++y) {
        std::size_t total = 0, wrong = 0;
        for (std::size_t c = 0; c < L; ++c) {
            total += confusion[y][c];
            if (c != y) wrong += confusion[y][c];
        }
        if (total > 0) rates[y] = static_cast<double>(wrong) / static_cast<double>(total);
    }
    return rates;
}

}  // namespace testsupport
