#pragma once

#include <cstddef>
#include <vector>

namespace advshift {

// Entries below this are treated as boundary by operations that need
// interior points (logs appear in every divergence).
inline constexpr double kInteriorFloor = 1e-12;

// Absolute tolerance on sum-to-one at construction.
inline constexpr double kSimplexSumTol = 1e-9;

// A point on the probability simplex over L classes.
// Default-constructed instances are empty placeholders; every operation on
// them throws.
class LabelDistribution {
public:
    LabelDistribution() = default;

    static LabelDistribution uniform(std::size_t n_classes);
    static LabelDistribution point_mass(std::size_t n_classes, std::size_t index);
    // Validates: finite, non-negative, sums to 1 within kSimplexSumTol.
    static LabelDistribution from_probs(std::vector<double> probs);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    const std::vector<double>& probs() const { return probs_; }

    double min_entry() const;
    bool is_interior(double floor = kInteriorFloor) const;
    void require_interior(double floor = kInteriorFloor) const;
    // Same check, names the offending operand in the error message.
    void require_interior(const char* what, double floor = kInteriorFloor) const;

private:
    explicit LabelDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}
    std::vector<double> probs_;
};

// KL(p ‖ q) = Σ p(i) log(p(i)/q(i)), with 0 log(0/q) := 0.
// Throws DomainError when some p(i) > 0 has q(i) = 0 (divergence is +inf).
double kl_divergence(const LabelDistribution& p, const LabelDistribution& q);

// w / Σw. All entries must be strictly positive and finite.
LabelDistribution normalize(const std::vector<double>& weights);

// (1-eps) p + eps/L. Guarantees every entry >= eps/L.
LabelDistribution mix_with_uniform(const LabelDistribution& p, double epsilon);

// Euclidean-nearest simplex point (sort-and-threshold).
LabelDistribution euclidean_project_simplex(const std::vector<double>& v);

// Tilted distribution proportional to p(i) exp(scores(i)/lambda).
// Shielded by subtracting max(scores)/lambda before exponentiation.
LabelDistribution exponential_tilt(const LabelDistribution& p,
                                   const std::vector<double>& scores, double lambda);

}  // namespace advshift
