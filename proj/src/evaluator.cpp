#include "advshift/evaluator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "advshift/errors.hpp"

namespace advshift {

namespace {

constexpr double kLambdaLo = 1e-8;
constexpr double kLambdaHi = 1e8;
constexpr double kKlTol = 1e-8;
constexpr int kBisectMax = 200;

double dot(const std::vector<double>& e, const LabelDistribution& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) s += e[i] * p[i];
    return s;
}

// argmax of e; ties go to the class with the largest reference mass, which is
// the cheapest vertex in KL.
std::size_t best_vertex(const std::vector<double>& e, const LabelDistribution& p_ref) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < e.size(); ++i) {
        if (e[i] > e[best] || (e[i] == e[best] && p_ref[i] > p_ref[best])) best = i;
    }
    return best;
}

struct TiltRoot {
    LabelDistribution pi;
    double kl = 0.0;
    bool hit = false;  // |kl - target| <= kKlTol reached
};

// Find lambda in [lo, hi] with KL(tilt(lambda) || p_ref) = target.
// Requires KL(tilt(lo)) >= target >= KL(tilt(hi)); bisection in log(lambda).
// Runs to interval collapse rather than stopping at a KL tolerance: callers
// multiply the residual KL error by penalty weights as large as 1e8, so a
// loose root would leak into the reported value.
TiltRoot tilt_for_kl(const std::vector<double>& e, const LabelDistribution& p_ref,
                     double target, double lo, double hi) {
    TiltRoot out;
    int it = 0;
    do {
        const double mid = std::sqrt(lo * hi);
        out.pi = exponential_tilt(p_ref, e, mid);
        out.kl = kl_divergence(out.pi, p_ref);
        if (out.kl > target)
            lo = mid;
        else
            hi = mid;
        ++it;
    } while (it < kBisectMax && hi > lo * (1.0 + 1e-14));
    out.hit = std::abs(out.kl - target) <= kKlTol;
    return out;
}

}  // namespace

void ErrorProfile::validate() const {
    if (values.size() != reference.size() || counts.size() != values.size())
        throw ShapeError("ErrorProfile: values/reference/counts lengths disagree");
    for (double v : values)
        if (!std::isfinite(v)) throw DomainError("ErrorProfile: non-finite value");
}

ErrorProfile per_class_errors(const ModelParams& params, const Dataset& data) {
    const std::size_t L = data.n_classes();
    ErrorProfile out;
    out.values.assign(L, 0.0);
    out.counts.assign(L, 0);
    for (const Example& ex : data.examples()) {
        if (predict(params, ex.features) != ex.label) out.values[ex.label] += 1.0;
        ++out.counts[ex.label];
    }
    for (std::size_t c = 0; c < L; ++c) {
        if (out.counts[c] == 0)
            throw DomainError("per_class_errors: class " + std::to_string(c) +
                              " has no examples");
        out.values[c] /= static_cast<double>(out.counts[c]);
    }
    out.reference = data.empirical_marginal();
    return out;
}

WorstCase worst_case_value(const std::vector<double>& e, const LabelDistribution& p_ref,
                           double tau) {
    if (e.size() != p_ref.size()) throw ShapeError("worst_case_value: size mismatch");
    if (e.empty()) throw ShapeError("worst_case_value: empty profile");
    if (!(tau >= 0.0)) throw DomainError("worst_case_value: tau must be >= 0");
    p_ref.require_interior("worst_case_value p_ref");
    for (double v : e)
        if (!std::isfinite(v)) throw DomainError("worst_case_value: non-finite value");

    WorstCase out;
    if (tau == 0.0) {
        out.value = dot(e, p_ref);
        out.witness = p_ref;
        return out;
    }

    const std::size_t star = best_vertex(e, p_ref);
    const double vertex_kl = -std::log(p_ref[star]);
    if (tau >= vertex_kl - 1e-12) {
        out.value = e[star];
        out.witness = LabelDistribution::point_mass(e.size(), star);
        out.kl = vertex_kl;
        out.point_mass = true;
        return out;
    }

    // From here the ball is strictly inside the simplex face structure, so the
    // constraint binds at the optimum...
    LabelDistribution sharp = exponential_tilt(p_ref, e, kLambdaLo);
    const double kl_sharp = kl_divergence(sharp, p_ref);
    if (kl_sharp <= tau) {
        // ...unless e has (numerically) tied maxima: the tilt family then
        // saturates below tau and the sharpest member is already optimal.
        out.value = dot(e, sharp);
        out.witness = std::move(sharp);
        out.kl = kl_sharp;
        return out;
    }

    TiltRoot root = tilt_for_kl(e, p_ref, tau, kLambdaLo, kLambdaHi);
    out.value = dot(e, root.pi);
    out.witness = std::move(root.pi);
    out.kl = root.kl;
    return out;
}

WorstCase worst_case_value(const ErrorProfile& profile, double tau) {
    profile.validate();
    return worst_case_value(profile.values, profile.reference, tau);
}

ShiftCurve shift_sweep(const ErrorProfile& profile, const std::vector<double>& taus) {
    if (taus.empty()) throw DomainError("shift_sweep: empty tau list");
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (!(taus[i] > taus[i - 1]))
            throw DomainError("shift_sweep: taus must be strictly increasing");
    ShiftCurve curve;
    curve.points.reserve(taus.size());
    for (double tau : taus) {
        WorstCase wc = worst_case_value(profile, tau);
        curve.points.push_back({tau, wc.value, std::move(wc.witness)});
    }
    return curve;
}

InnerMax inner_max_penalized(const ErrorProfile& profile, const AdversaryConfig& cfg) {
    profile.validate();
    const std::vector<double>& e = profile.values;
    const LabelDistribution& p_ref = profile.reference;
    p_ref.require_interior("inner_max_penalized p_ref");
    if (cfg.r < 0.0) throw ConfigError("inner_max_penalized: r must be >= 0");
    if (cfg.gamma_c < 0.0) throw ConfigError("inner_max_penalized: gamma_c must be >= 0");

    const std::size_t star = best_vertex(e, p_ref);
    const double vertex_kl = -std::log(p_ref[star]);

    InnerMax out;
    if (cfg.gamma_c == 0.0 || cfg.r >= vertex_kl - 1e-12) {
        // No penalty anywhere (gamma_c = 0) or none at the payoff's own
        // maximizer: the linear term wins outright.
        out.value = e[star];
        out.witness = LabelDistribution::point_mass(e.size(), star);
        out.kl = vertex_kl;
        return out;
    }

    LabelDistribution active = exponential_tilt(p_ref, e, cfg.gamma_c);
    const double kl_active = kl_divergence(active, p_ref);
    if (kl_active >= cfg.r) {
        out.value = dot(e, active) + cfg.gamma_c * (cfg.r - kl_active);
        out.witness = std::move(active);
        out.kl = kl_active;
        return out;
    }

    // Kink case: the optimum sits on KL = r with an effective tilt temperature
    // s * gamma_c, s in (0, 1].
    TiltRoot root = tilt_for_kl(e, p_ref, cfg.r, kLambdaLo, cfg.gamma_c);
    out.value = dot(e, root.pi) + cfg.gamma_c * std::min(0.0, cfg.r - root.kl);
    out.witness = std::move(root.pi);
    out.kl = root.kl;
    out.converged = root.hit;
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double_field(const std::string& field, const std::string& path, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ParseError(path + ":" + std::to_string(line) + ": bad number '" + field + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

void save_profile_csv(const ErrorProfile& profile, const std::string& path) {
    profile.validate();
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << "class_id,error,count,ref_prob\n";
    for (std::size_t c = 0; c < profile.size(); ++c) {
        out << c << ',' << format_double(profile.values[c]) << ',' << profile.counts[c] << ','
            << format_double(profile.reference[c]) << "\n";
    }
    if (!out) throw ParseError("failed writing '" + path + "'");
}

ErrorProfile load_profile_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "class_id,error,count,ref_prob")
        throw ParseError(path + ": expected header 'class_id,error,count,ref_prob'");
    std::vector<double> values;
    std::vector<double> ref;
    std::vector<std::size_t> counts;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        const auto id = static_cast<std::size_t>(
            parse_double_field(fields[0], path, lineno));
        if (id != values.size())
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": class ids must be 0,1,2,...");
        values.push_back(parse_double_field(fields[1], path, lineno));
        counts.push_back(static_cast<std::size_t>(parse_double_field(fields[2], path, lineno)));
        ref.push_back(parse_double_field(fields[3], path, lineno));
    }
    if (values.empty()) throw ParseError(path + ": no profile rows");
    ErrorProfile profile;
    profile.values = std::move(values);
    profile.counts = std::move(counts);
    profile.reference = LabelDistribution::from_probs(ref);
    profile.validate();
    return profile;
}

void save_curve_csv(const ShiftCurve& curve, const std::string& path) {
    if (curve.points.empty()) throw DomainError("save_curve_csv: empty curve");
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    const std::size_t L = curve.points.front().witness.size();
    out << "tau,value";
    for (std::size_t c = 0; c < L; ++c) out << ",w_" << c;
    out << "\n";
    for (const ShiftPoint& pt : curve.points) {
        out << format_double(pt.tau) << ',' << format_double(pt.value);
        for (std::size_t c = 0; c < L; ++c) out << ',' << format_double(pt.witness[c]);
        out << "\n";
    }
    if (!out) throw ParseError("failed writing '" + path + "'");
}

}  // namespace advshift
