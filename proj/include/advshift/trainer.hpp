#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advshift/adversary.hpp"
#include "advshift/dataset.hpp"
#include "advshift/model.hpp"

namespace advshift {

enum class Method { advshift, erm, balanced, fixed, agnostic };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct TrainConfig {
    Method method = Method::advshift;
    AdversaryConfig adversary;
    double theta_lr = 0.1;
    double momentum = 0.0;
    double lr_decay = 1.0;  // per-epoch multiplier on theta_lr
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
    Arch arch = Arch::linear;
    std::size_t hidden = 16;
    std::optional<double> eta_pi_override;  // adversary tilt step; default is the closed form's
    double agnostic_lr = 0.1;               // step for the projected-ascent baseline
    std::vector<double> fixed_pi;           // required when method == fixed

    void validate(const Dataset& data) const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    std::vector<double> class_losses;
    std::vector<double> pi;
    double kl_pi_pemp = 0.0;
    std::vector<double> class_errors;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    ModelParams params;
    TrainHistory history;
    AdversaryState adversary;
    // Parameter snapshot at the end of each epoch (diagnostics input).
    std::vector<ModelParams> epoch_params;
};

// Importance-weighted minibatch gradient:
//   g = (1/b) sum_j pi(y_j)/p_emp(y_j) * grad loss_j.
std::vector<double> weighted_theta_gradient(const std::vector<Example>& batch,
                                            const LabelDistribution& pi,
                                            const LabelDistribution& p_emp,
                                            const ModelParams& params);

// v' = momentum v + grad; params' = params - lr v'.
std::pair<ModelParams, std::vector<double>> sgd_momentum_step(const ModelParams& params,
                                                              const std::vector<double>& grad,
                                                              const std::vector<double>& velocity,
                                                              double lr, double momentum);

// The full gradient descent / proximal mirror ascent loop (and the erm,
// balanced, fixed, agnostic baselines). Deterministic given (config, data).
TrainResult train(const TrainConfig& cfg, const Dataset& data);

// history.csv: epoch,mean_loss,kl_pi_pemp,loss_0..,pi_0..,err_0..
void save_history_csv(const TrainHistory& history, const std::string& path);

}  // namespace advshift
