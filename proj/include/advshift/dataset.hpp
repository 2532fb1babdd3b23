#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advshift/model.hpp"
#include "advshift/simplex.hpp"

namespace advshift {

// Immutable labelled sample with a cached empirical label marginal.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<Example> examples, std::size_t n_classes, std::size_t dim);

    const std::vector<Example>& examples() const { return examples_; }
    std::size_t size() const { return examples_.size(); }
    std::size_t n_classes() const { return n_classes_; }
    std::size_t dim() const { return dim_; }
    const std::vector<std::size_t>& class_counts() const { return class_counts_; }

    // Throws DomainError if some class has zero examples.
    LabelDistribution empirical_marginal() const;
    bool covers_all_classes() const;

private:
    std::vector<Example> examples_;
    std::size_t n_classes_ = 0;
    std::size_t dim_ = 0;
    std::vector<std::size_t> class_counts_;
};

// Seeded class-conditional Gaussian generator. Class means are random unit
// directions scaled by `separation`; per-class noise scales set difficulty
// independently of frequency.
struct SynthConfig {
    std::size_t n_classes = 2;
    std::size_t dim = 2;
    double separation = 2.0;
    std::vector<double> noise_scales;  // size 1 (shared) or n_classes
    std::vector<double> marginal;      // empty = uniform
    std::size_t n = 100;
    std::uint64_t seed = 1;
};

Dataset gaussian_mixture_dataset(const SynthConfig& cfg);

// Label-shift resample: labels drawn i.i.d. from `target`, features drawn
// with replacement from the class-conditional pool of `data` (p(x|y) kept).
Dataset resample_label_distribution(const Dataset& data, const LabelDistribution& target,
                                    std::size_t n, std::uint64_t seed);

// CSV with header "label,f0,...,f{d-1}".
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& data, const std::string& path);

}  // namespace advshift
