#include "advshift/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "advshift/errors.hpp"
#include "advshift/rng.hpp"
#include "advshift/simplex.hpp"

namespace advshift {

std::string method_name(Method m) {
    switch (m) {
        case Method::advshift: return "advshift";
        case Method::erm: return "erm";
        case Method::balanced: return "balanced";
        case Method::fixed: return "fixed";
        case Method::agnostic: return "agnostic";
    }
    throw ConfigError("unknown method enum value");
}

Method method_from_name(const std::string& name) {
    if (name == "advshift") return Method::advshift;
    if (name == "erm") return Method::erm;
    if (name == "balanced") return Method::balanced;
    if (name == "fixed") return Method::fixed;
    if (name == "agnostic") return Method::agnostic;
    throw ConfigError("unknown method '" + name + "'");
}

void TrainConfig::validate(const Dataset& data) const {
    adversary.validate();
    if (theta_lr <= 0.0) throw ConfigError("theta_lr must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0,1)");
    if (lr_decay <= 0.0 || lr_decay > 1.0) throw ConfigError("lr_decay must be in (0,1]");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (batch_size > data.size()) throw ConfigError("batch_size exceeds dataset size");
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (agnostic_lr <= 0.0) throw ConfigError("agnostic_lr must be positive");
    if (eta_pi_override && !(*eta_pi_override > 0.0))
        throw ConfigError("eta_pi must be positive");
    if (method == Method::fixed) {
        if (fixed_pi.size() != data.n_classes())
            throw ConfigError("fixed method needs a fixed_pi with one entry per class");
        LabelDistribution::from_probs(fixed_pi);  // validates
    }
    if (!data.covers_all_classes())
        throw ConfigError("training data must contain every class at least once");
}

std::vector<double> weighted_theta_gradient(const std::vector<Example>& batch,
                                            const LabelDistribution& pi,
                                            const LabelDistribution& p_emp,
                                            const ModelParams& params) {
    if (batch.empty()) throw DomainError("weighted_theta_gradient: empty batch");
    if (pi.size() != p_emp.size())
        throw ShapeError("weighted_theta_gradient: pi/p_emp size mismatch");
    p_emp.require_interior("weighted_theta_gradient p_emp");
    std::vector<double> acc(params.weights.size(), 0.0);
    for (const Example& ex : batch) {
        const auto y = static_cast<std::size_t>(ex.label);
        if (ex.label < 0 || y >= pi.size()) throw ShapeError("batch label out of range");
        const double w = pi[y] / p_emp[y];
        const std::vector<double> g = loss_gradient(params, ex);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += w * g[k];
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (double& v : acc) v *= inv_b;
    return acc;
}

std::pair<ModelParams, std::vector<double>> sgd_momentum_step(const ModelParams& params,
                                                              const std::vector<double>& grad,
                                                              const std::vector<double>& velocity,
                                                              double lr, double momentum) {
    if (grad.size() != params.weights.size() || velocity.size() != params.weights.size())
        throw ShapeError("sgd_momentum_step: size mismatch");
    ModelParams out = params;
    std::vector<double> v(velocity.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = momentum * velocity[k] + grad[k];
        out.weights[k] -= lr * v[k];
    }
    return {std::move(out), std::move(v)};
}

namespace {

// Mean loss, per-class mean losses and per-class error rates over the full
// dataset at the current parameters.
void full_pass_stats(const Dataset& data, const ModelParams& params, double& mean_loss,
                     std::vector<double>& class_losses, std::vector<double>& class_errors) {
    const std::size_t L = data.n_classes();
    class_losses.assign(L, 0.0);
    class_errors.assign(L, 0.0);
    double total = 0.0;
    for (const Example& ex : data.examples()) {
        const auto y = static_cast<std::size_t>(ex.label);
        const double l = per_example_loss(params, ex);
        total += l;
        class_losses[y] += l;
        if (predict(params, ex.features) != ex.label) class_errors[y] += 1.0;
    }
    mean_loss = total / static_cast<double>(data.size());
    for (std::size_t c = 0; c < L; ++c) {
        const auto n_c = static_cast<double>(data.class_counts()[c]);
        if (n_c > 0.0) {
            class_losses[c] /= n_c;
            class_errors[c] /= n_c;
        }
    }
}

LabelDistribution agnostic_update(const LabelDistribution& pi, const std::vector<double>& g,
                                  double lr) {
    std::vector<double> point(pi.size());
    for (std::size_t i = 0; i < point.size(); ++i) point[i] = pi[i] + lr * g[i];
    return euclidean_project_simplex(point);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& data) {
    cfg.validate(data);
    const std::size_t L = data.n_classes();

    ModelShape shape{cfg.arch, data.dim(), cfg.arch == Arch::mlp ? cfg.hidden : 0, L};
    ModelParams params = ModelParams::seeded_uniform(shape, stream_seed(cfg.seed, "model-init"));
    std::vector<double> velocity(params.weights.size(), 0.0);

    AdversaryState adv = AdversaryState::initial(L);
    // Warm-start the marginal estimate from the data; the EMA then tracks
    // batches.
    adv.p_emp = data.empirical_marginal();
    switch (cfg.method) {
        case Method::advshift:
        case Method::agnostic:
        case Method::erm:
            adv.pi = adv.p_emp;
            break;
        case Method::balanced:
            adv.pi = LabelDistribution::uniform(L);
            break;
        case Method::fixed:
            adv.pi = LabelDistribution::from_probs(cfg.fixed_pi);
            break;
    }

    Rng shuffle_rng(stream_seed(cfg.seed, "batch-order"));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.history.epochs.reserve(cfg.epochs);
    result.epoch_params.reserve(cfg.epochs);

    std::vector<Example> batch;
    std::vector<int> labels;
    std::vector<double> losses;
    double lr = cfg.theta_lr;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start + cfg.batch_size <= order.size();
             start += cfg.batch_size) {
            batch.clear();
            labels.clear();
            for (std::size_t k = 0; k < cfg.batch_size; ++k) {
                batch.push_back(data.examples()[order[start + k]]);
                labels.push_back(batch.back().label);
            }

            adv.p_emp = ema_update(adv.p_emp, labels, cfg.adversary.beta);
            if (cfg.method == Method::erm) adv.pi = adv.p_emp;

            const auto grad = weighted_theta_gradient(batch, adv.pi, adv.p_emp, params);
            auto stepped = sgd_momentum_step(params, grad, velocity, lr, cfg.momentum);
            params = std::move(stepped.first);
            velocity = std::move(stepped.second);

            if (cfg.method == Method::advshift || cfg.method == Method::agnostic) {
                // The adversary sees the post-step parameters.
                losses.resize(batch.size());
                for (std::size_t j = 0; j < batch.size(); ++j)
                    losses[j] = per_example_loss(params, batch[j]);
                const auto g_pi =
                    adversary_gradient(labels, losses, adv.p_emp, cfg.adversary.clip);
                if (cfg.method == Method::advshift) {
                    const double alpha = lagrange_alpha(adv.pi, adv.p_emp, cfg.adversary);
                    adv.pi = mirror_proximal_update(adv, g_pi, alpha, cfg.adversary,
                                                    cfg.eta_pi_override);
                } else {
                    adv.pi = agnostic_update(adv.pi, g_pi, cfg.agnostic_lr);
                }
            }
            ++adv.step;
        }
        lr *= cfg.lr_decay;

        EpochRecord rec;
        rec.epoch = epoch;
        full_pass_stats(data, params, rec.mean_loss, rec.class_losses, rec.class_errors);
        rec.pi = adv.pi.probs();
        rec.kl_pi_pemp = kl_divergence(adv.pi, adv.p_emp);
        result.history.epochs.push_back(std::move(rec));
        result.epoch_params.push_back(params);
    }

    result.params = std::move(params);
    result.adversary = std::move(adv);
    return result;
}

namespace {

void append_double(std::string& line, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    line.push_back(',');
    line.append(buf, res.ptr);
}

}  // namespace

void save_history_csv(const TrainHistory& history, const std::string& path) {
    if (history.epochs.empty()) throw DomainError("save_history_csv: empty history");
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    const std::size_t L = history.epochs.front().pi.size();
    out << "epoch,mean_loss,kl_pi_pemp";
    for (std::size_t c = 0; c < L; ++c) out << ",loss_" << c;
    for (std::size_t c = 0; c < L; ++c) out << ",pi_" << c;
    for (std::size_t c = 0; c < L; ++c) out << ",err_" << c;
    out << "\n";
    for (const EpochRecord& rec : history.epochs) {
        std::string line = std::to_string(rec.epoch);
        append_double(line, rec.mean_loss);
        append_double(line, rec.kl_pi_pemp);
        for (double v : rec.class_losses) append_double(line, v);
        for (double v : rec.pi) append_double(line, v);
        for (double v : rec.class_errors) append_double(line, v);
        out << line << "\n";
    }
    if (!out) throw ParseError("failed writing '" + path + "'");
}

}  // namespace advshift
