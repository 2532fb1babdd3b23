#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "advshift/adversary.hpp"
#include "advshift/dataset.hpp"
#include "advshift/model.hpp"
#include "advshift/simplex.hpp"

namespace advshift {

// Per-class statistic (0-1 error rate for reported curves, clipped loss for
// diagnostics) together with the reference marginal it was measured under.
struct ErrorProfile {
    std::vector<double> values;
    LabelDistribution reference;
    std::vector<std::size_t> counts;

    std::size_t size() const { return values.size(); }
    void validate() const;
};

struct WorstCase {
    double value = 0.0;
    LabelDistribution witness;
    double kl = 0.0;          // KL(witness || reference)
    bool point_mass = false;  // unconstrained branch: ball contains a vertex
};

struct ShiftPoint {
    double tau = 0.0;
    double value = 0.0;
    LabelDistribution witness;
};

struct ShiftCurve {
    std::vector<ShiftPoint> points;
};

struct InnerMax {
    double value = 0.0;  // payoff plus (non-positive) penalty term
    LabelDistribution witness;
    double kl = 0.0;
    bool converged = true;
};

ErrorProfile per_class_errors(const ModelParams& params, const Dataset& data);

// max <pi, e>  s.t.  KL(pi || p_ref) <= tau.
// Solved through the dual family pi(lambda) = exponential_tilt(p_ref, e, lambda)
// with bisection on lambda; KL(pi(lambda) || p_ref) decreases in lambda.
WorstCase worst_case_value(const std::vector<double>& e, const LabelDistribution& p_ref,
                           double tau);
WorstCase worst_case_value(const ErrorProfile& profile, double tau);

ShiftCurve shift_sweep(const ErrorProfile& profile, const std::vector<double>& taus);

// max <pi, e> + min{0, gamma_c (r - KL(pi || p_ref))}.
// The concave program splits into three regimes: the KL ball already contains
// the best vertex (point mass), the penalty is active (tilt at lambda =
// gamma_c), or the optimum sits on the KL(pi||p_ref) = r boundary (tilt with
// lambda in (0, gamma_c] found by bisection).
InnerMax inner_max_penalized(const ErrorProfile& profile, const AdversaryConfig& cfg);

// profile.csv: class_id,error,count,ref_prob
void save_profile_csv(const ErrorProfile& profile, const std::string& path);
ErrorProfile load_profile_csv(const std::string& path);

// curve.csv: tau,value,w_0,...,w_{L-1}
void save_curve_csv(const ShiftCurve& curve, const std::string& path);

}  // namespace advshift
