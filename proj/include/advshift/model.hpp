#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace advshift {

enum class Arch { linear, mlp };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& name);

// Shape metadata for the flat weight vector.
// linear: W[L x d] then b[L].
// mlp:    W1[h x d], b1[h], W2[L x h], b2[L]; hidden activation tanh.
struct ModelShape {
    Arch arch = Arch::linear;
    std::size_t input_dim = 0;
    std::size_t hidden = 0;  // ignored for linear
    std::size_t n_classes = 0;

    std::size_t param_count() const;
    bool operator==(const ModelShape&) const = default;
};

struct ModelParams {
    ModelShape shape;
    std::vector<double> weights;

    static ModelParams zeros(const ModelShape& shape);
    // Deterministic init, uniform in [-0.05, 0.05].
    static ModelParams seeded_uniform(const ModelShape& shape, std::uint64_t seed);
};

struct Example {
    std::vector<double> features;
    int label = 0;
};

// Class logits for a feature vector.
std::vector<double> model_logits(const ModelParams& params, const std::vector<double>& x);

// Softmax cross-entropy, computed as logsumexp(logits) - logits[label].
double per_example_loss(const ModelParams& params, const Example& ex);

// Exact analytic gradient of per_example_loss, flat layout matching weights.
std::vector<double> loss_gradient(const ModelParams& params, const Example& ex);

// Argmax of logits; ties broken by lowest class index.
int predict(const ModelParams& params, const std::vector<double>& features);

// Versioned text checkpoint; weights serialised shortest-round-trip so the
// load is bit exact.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace advshift
