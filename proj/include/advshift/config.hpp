#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "advshift/dataset.hpp"
#include "advshift/trainer.hpp"

namespace advshift {

// Flat `key = value` text, one pair per line, '#' starts a comment.
// Values keep internal whitespace; keys must be unique.
std::map<std::string, std::string> parse_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_text(const std::string& text,
                                                 const std::string& origin);

// Typed view over a parsed key-value map that records which keys were read,
// so callers can reject unknown ones.
class KvReader {
public:
    KvReader(std::map<std::string, std::string> kv, std::string origin);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key, double fallback);
    std::size_t get_size(const std::string& key, std::size_t fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback);
    std::vector<std::string> get_string_list(const std::string& key,
                                             const std::vector<std::string>& fallback);

    // Throws ConfigError naming the first key never consumed by a getter.
    void reject_unknown() const;
    const std::string& origin() const { return origin_; }

private:
    const std::string& raw(const std::string& key);
    std::map<std::string, std::string> kv_;
    std::set<std::string> seen_;
    std::string origin_;
};

// Keys: method, r, gamma_c, lambda, eta_pi, epsilon, clip, beta, theta_lr,
// momentum, batch, epochs, seed, arch, hidden, lr_decay, agnostic_lr, fixed_pi.
TrainConfig train_config_from_kv(KvReader& kv);
TrainConfig load_train_config(const std::string& path);

// Keys: synth, classes, dim, n, separation, noise, marginal, seed.
SynthConfig synth_config_from_kv(KvReader& kv);

// Loads either a dataset CSV (header starts with "label") or a synthetic
// generator spec (key-value text containing `synth = true`).
Dataset load_data_any(const std::string& path);

std::vector<double> parse_double_list(const std::string& text, const std::string& what);

}  // namespace advshift
