#include "advshift/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "advshift/errors.hpp"
#include "advshift/rng.hpp"

namespace advshift {

Dataset::Dataset(std::vector<Example> examples, std::size_t n_classes, std::size_t dim)
    : examples_(std::move(examples)), n_classes_(n_classes), dim_(dim),
      class_counts_(n_classes, 0) {
    for (const Example& ex : examples_) {
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= n_classes_) {
            throw DomainError("dataset: label " + std::to_string(ex.label) + " out of range");
        }
        if (ex.features.size() != dim_) {
            throw DomainError("dataset: feature dim mismatch");
        }
        ++class_counts_[static_cast<std::size_t>(ex.label)];
    }
}

LabelDistribution Dataset::empirical_marginal() const {
    if (examples_.empty()) throw DomainError("dataset: empty, no marginal");
    std::vector<double> p(n_classes_);
    for (std::size_t i = 0; i < n_classes_; ++i) {
        if (class_counts_[i] == 0) {
            throw DomainError("dataset: class " + std::to_string(i) + " has no examples");
        }
        p[i] = static_cast<double>(class_counts_[i]) / static_cast<double>(examples_.size());
    }
    return LabelDistribution::from_probs(std::move(p));
}

bool Dataset::covers_all_classes() const {
    for (std::size_t c : class_counts_) {
        if (c == 0) return false;
    }
    return !examples_.empty();
}

namespace {

std::vector<std::vector<double>> class_means(const SynthConfig& cfg, Rng& rng) {
    // Random directions normalised to unit length, scaled by separation.
    std::vector<std::vector<double>> means(cfg.n_classes, std::vector<double>(cfg.dim));
    for (auto& m : means) {
        double norm2 = 0.0;
        for (double& x : m) {
            x = rng.normal();
            norm2 += x * x;
        }
        const double norm = std::sqrt(norm2);
        for (double& x : m) x = cfg.separation * x / (norm > 0 ? norm : 1.0);
    }
    return means;
}

}  // namespace

Dataset gaussian_mixture_dataset(const SynthConfig& cfg) {
    if (cfg.n_classes == 0 || cfg.dim == 0) throw ConfigError("synth: zero classes or dim");
    if (cfg.n < cfg.n_classes) throw ConfigError("synth: n must be >= n_classes");
    std::vector<double> noise = cfg.noise_scales;
    if (noise.empty()) noise.assign(cfg.n_classes, 1.0);
    if (noise.size() == 1) noise.assign(cfg.n_classes, noise[0]);
    if (noise.size() != cfg.n_classes) throw ConfigError("synth: noise_scales size mismatch");
    for (double s : noise) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("synth: bad noise scale");
    }
    std::vector<double> marginal = cfg.marginal;
    if (marginal.empty()) {
        marginal.assign(cfg.n_classes, 1.0 / static_cast<double>(cfg.n_classes));
    }
    if (marginal.size() != cfg.n_classes) throw ConfigError("synth: marginal size mismatch");
    const LabelDistribution pm = LabelDistribution::from_probs(marginal);

    Rng mean_rng(cfg.seed, "synth-means");
    Rng label_rng(cfg.seed, "synth-labels");
    Rng noise_rng(cfg.seed, "synth-noise");
    const auto means = class_means(cfg, mean_rng);

    std::vector<double> cum(cfg.n_classes);
    double acc = 0.0;
    for (std::size_t i = 0; i < cfg.n_classes; ++i) {
        acc += pm[i];
        cum[i] = acc;
    }

    std::vector<Example> examples;
    examples.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const std::size_t y = label_rng.categorical(cum);
        Example ex;
        ex.label = static_cast<int>(y);
        ex.features.resize(cfg.dim);
        for (std::size_t j = 0; j < cfg.dim; ++j) {
            ex.features[j] = means[y][j] + noise[y] * noise_rng.normal();
        }
        examples.push_back(std::move(ex));
    }
    return Dataset(std::move(examples), cfg.n_classes, cfg.dim);
}

Dataset resample_label_distribution(const Dataset& data, const LabelDistribution& target,
                                    std::size_t n, std::uint64_t seed) {
    if (target.size() != data.n_classes()) {
        throw DomainError("resample: target size != dataset classes");
    }
    // Class-conditional pools.
    std::vector<std::vector<std::size_t>> pools(data.n_classes());
    for (std::size_t i = 0; i < data.size(); ++i) {
        pools[static_cast<std::size_t>(data.examples()[i].label)].push_back(i);
    }
    for (std::size_t c = 0; c < target.size(); ++c) {
        if (target[c] > 0.0 && pools[c].empty()) {
            throw DomainError("resample: target puts mass on class " + std::to_string(c) +
                              " absent from the source dataset");
        }
    }
    std::vector<double> cum(target.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        acc += target[i];
        cum[i] = acc;
    }
    Rng rng(seed, "resample");
    std::vector<Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = rng.categorical(cum);
        const auto& pool = pools[y];
        const std::size_t pick = pool[rng.uniform_int(pool.size())];
        out.push_back(data.examples()[pick]);
    }
    return Dataset(std::move(out), data.n_classes(), data.dim());
}

namespace {

double parse_csv_double(const std::string& tok, std::size_t line_no) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
    }
    return x;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            toks.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    toks.push_back(cur);
    return toks;
}

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, end);
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file " + path);
    const auto header = split_csv(line);
    if (header.empty() || header[0] != "label") {
        throw ParseError("line 1: header must start with 'label', got '" + line + "'");
    }
    const std::size_t dim = header.size() - 1;
    std::vector<Example> examples;
    int max_label = -1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto toks = split_csv(line);
        if (toks.size() != dim + 1) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(dim + 1) + " fields, got " +
                             std::to_string(toks.size()));
        }
        Example ex;
        const double lab = parse_csv_double(toks[0], line_no);
        if (lab < 0 || lab != std::floor(lab)) {
            throw ParseError("line " + std::to_string(line_no) + ": label must be a non-negative integer");
        }
        ex.label = static_cast<int>(lab);
        max_label = std::max(max_label, ex.label);
        ex.features.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) ex.features[j] = parse_csv_double(toks[j + 1], line_no);
        examples.push_back(std::move(ex));
    }
    const std::size_t n_classes = static_cast<std::size_t>(max_label + 1);
    return Dataset(std::move(examples), n_classes, dim);
}

void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    out << "label";
    for (std::size_t j = 0; j < data.dim(); ++j) out << ",f" << j;
    out << "\n";
    for (const Example& ex : data.examples()) {
        out << ex.label;
        for (double f : ex.features) out << "," << format_double(f);
        out << "\n";
    }
    if (!out) throw ParseError("write failed: " + path);
}

}  // namespace advshift
