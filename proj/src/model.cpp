#include "advshift/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "advshift/errors.hpp"
#include "advshift/rng.hpp"

namespace advshift {

std::string arch_name(Arch a) { return a == Arch::linear ? "linear" : "mlp"; }

Arch arch_from_name(const std::string& name) {
    if (name == "linear") return Arch::linear;
    if (name == "mlp") return Arch::mlp;
    throw ConfigError("unknown architecture '" + name + "' (expected linear|mlp)");
}

std::size_t ModelShape::param_count() const {
    if (arch == Arch::linear) return n_classes * input_dim + n_classes;
    return hidden * input_dim + hidden + n_classes * hidden + n_classes;
}

ModelParams ModelParams::zeros(const ModelShape& shape) {
    return ModelParams{shape, std::vector<double>(shape.param_count(), 0.0)};
}

ModelParams ModelParams::seeded_uniform(const ModelShape& shape, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> w(shape.param_count());
    for (double& x : w) x = rng.uniform(-0.05, 0.05);
    return ModelParams{shape, std::move(w)};
}

namespace {

void check_shapes(const ModelParams& params, std::size_t feature_dim) {
    if (params.weights.size() != params.shape.param_count()) {
        throw ShapeError("weight vector has " + std::to_string(params.weights.size()) +
                         " entries, shape needs " + std::to_string(params.shape.param_count()));
    }
    if (feature_dim != params.shape.input_dim) {
        throw ShapeError("feature dim " + std::to_string(feature_dim) + " != input dim " +
                         std::to_string(params.shape.input_dim));
    }
    if (params.shape.n_classes == 0) throw ShapeError("model has zero classes");
    if (params.shape.arch == Arch::mlp && params.shape.hidden == 0) {
        throw ShapeError("mlp with zero hidden units");
    }
}

double log_sum_exp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// Softmax probabilities from logits, shielded.
std::vector<double> softmax(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        s += p[i];
    }
    for (double& x : p) x /= s;
    return p;
}

std::vector<double> hidden_activations(const ModelParams& params, const std::vector<double>& x) {
    const std::size_t h = params.shape.hidden, d = params.shape.input_dim;
    const double* w1 = params.weights.data();
    const double* b1 = w1 + h * d;
    std::vector<double> a(h);
    for (std::size_t j = 0; j < h; ++j) {
        double s = b1[j];
        for (std::size_t i = 0; i < d; ++i) s += w1[j * d + i] * x[i];
        a[j] = std::tanh(s);
    }
    return a;
}

}  // namespace

std::vector<double> model_logits(const ModelParams& params, const std::vector<double>& x) {
    check_shapes(params, x.size());
    const std::size_t L = params.shape.n_classes, d = params.shape.input_dim;
    if (params.shape.arch == Arch::linear) {
        const double* w = params.weights.data();
        const double* b = w + L * d;
        std::vector<double> z(L);
        for (std::size_t k = 0; k < L; ++k) {
            double s = b[k];
            for (std::size_t i = 0; i < d; ++i) s += w[k * d + i] * x[i];
            z[k] = s;
        }
        return z;
    }
    const std::size_t h = params.shape.hidden;
    const std::vector<double> a = hidden_activations(params, x);
    const double* w2 = params.weights.data() + h * d + h;
    const double* b2 = w2 + L * h;
    std::vector<double> z(L);
    for (std::size_t k = 0; k < L; ++k) {
        double s = b2[k];
        for (std::size_t j = 0; j < h; ++j) s += w2[k * h + j] * a[j];
        z[k] = s;
    }
    return z;
}

double per_example_loss(const ModelParams& params, const Example& ex) {
    const std::vector<double> z = model_logits(params, ex.features);
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= z.size()) {
        throw ShapeError("label " + std::to_string(ex.label) + " out of range");
    }
    return log_sum_exp(z) - z[static_cast<std::size_t>(ex.label)];
}

std::vector<double> loss_gradient(const ModelParams& params, const Example& ex) {
    const std::vector<double> z = model_logits(params, ex.features);
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= z.size()) {
        throw ShapeError("label " + std::to_string(ex.label) + " out of range");
    }
    const std::size_t L = params.shape.n_classes, d = params.shape.input_dim;
    std::vector<double> dz = softmax(z);
    dz[static_cast<std::size_t>(ex.label)] -= 1.0;  // softmax - onehot

    std::vector<double> grad(params.weights.size(), 0.0);
    if (params.shape.arch == Arch::linear) {
        double* gw = grad.data();
        double* gb = gw + L * d;
        for (std::size_t k = 0; k < L; ++k) {
            for (std::size_t i = 0; i < d; ++i) gw[k * d + i] = dz[k] * ex.features[i];
            gb[k] = dz[k];
        }
        return grad;
    }
    const std::size_t h = params.shape.hidden;
    const std::vector<double> a = hidden_activations(params, ex.features);
    const double* w2 = params.weights.data() + h * d + h;
    double* gw1 = grad.data();
    double* gb1 = gw1 + h * d;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + L * h;
    for (std::size_t k = 0; k < L; ++k) {
        for (std::size_t j = 0; j < h; ++j) gw2[k * h + j] = dz[k] * a[j];
        gb2[k] = dz[k];
    }
    for (std::size_t j = 0; j < h; ++j) {
        double da = 0.0;
        for (std::size_t k = 0; k < L; ++k) da += dz[k] * w2[k * h + j];
        da *= 1.0 - a[j] * a[j];  // tanh'
        for (std::size_t i = 0; i < d; ++i) gw1[j * d + i] = da * ex.features[i];
        gb1[j] = da;
    }
    return grad;
}

int predict(const ModelParams& params, const std::vector<double>& features) {
    const std::vector<double> z = model_logits(params, features);
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.size(); ++k) {
        if (z[k] > z[best]) best = k;
    }
    return static_cast<int>(best);
}

namespace {

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, end);
}

double parse_double(const std::string& tok, const std::string& context) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("bad number '" + tok + "' in " + context);
    }
    return x;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open checkpoint for writing: " + path);
    out << "advshift-checkpoint v1\n";
    out << "arch " << arch_name(params.shape.arch) << "\n";
    out << "input_dim " << params.shape.input_dim << "\n";
    out << "hidden " << params.shape.hidden << "\n";
    out << "n_classes " << params.shape.n_classes << "\n";
    out << "weights " << params.weights.size() << "\n";
    for (double w : params.weights) out << format_double(w) << "\n";
    if (!out) throw ParseError("write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open checkpoint: " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "advshift-checkpoint" || version != "v1") {
        throw ParseError("not an advshift v1 checkpoint: " + path);
    }
    ModelShape shape;
    std::string key, value;
    in >> key >> value;
    if (key != "arch") throw ParseError("checkpoint missing arch: " + path);
    shape.arch = arch_from_name(value);
    std::size_t count = 0;
    auto read_size = [&](const std::string& expect) {
        std::size_t v = 0;
        in >> key >> v;
        if (!in || key != expect) throw ParseError("checkpoint missing " + expect + ": " + path);
        return v;
    };
    shape.input_dim = read_size("input_dim");
    shape.hidden = read_size("hidden");
    shape.n_classes = read_size("n_classes");
    count = read_size("weights");
    if (count != shape.param_count()) {
        throw ParseError("checkpoint weight count mismatch in " + path);
    }
    std::vector<double> w(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::string tok;
        in >> tok;
        if (!in) throw ParseError("checkpoint truncated at weight " + std::to_string(i));
        w[i] = parse_double(tok, path);
    }
    return ModelParams{shape, std::move(w)};
}

}  // namespace advshift
