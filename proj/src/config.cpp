#include "advshift/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "advshift/errors.hpp"

namespace advshift {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    double v = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(v))
        throw ConfigError(what + ": bad number '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(trim(cur));
    parts.erase(std::remove(parts.begin(), parts.end(), std::string{}), parts.end());
    return parts;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const std::string& part : split_list(text)) out.push_back(parse_double(part, what));
    return out;
}

std::map<std::string, std::string> parse_kv_text(const std::string& text,
                                                 const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                             key + "'");
    }
    return kv;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_kv_text(buf.str(), path);
}

KvReader::KvReader(std::map<std::string, std::string> kv, std::string origin)
    : kv_(std::move(kv)), origin_(std::move(origin)) {}

bool KvReader::has(const std::string& key) const { return kv_.count(key) > 0; }

const std::string& KvReader::raw(const std::string& key) {
    seen_.insert(key);
    return kv_.at(key);
}

std::string KvReader::get_string(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double KvReader::get_double(const std::string& key, double fallback) {
    seen_.insert(key);
    if (!kv_.count(key)) return fallback;
    return parse_double(raw(key), origin_ + ": key '" + key + "'");
}

std::size_t KvReader::get_size(const std::string& key, std::size_t fallback) {
    const double v = get_double(key, static_cast<double>(fallback));
    if (v < 0.0 || v != std::floor(v))
        throw ConfigError(origin_ + ": key '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::uint64_t KvReader::get_u64(const std::string& key, std::uint64_t fallback) {
    seen_.insert(key);
    if (!kv_.count(key)) return fallback;
    const std::string t = trim(raw(key));
    std::uint64_t v = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ConfigError(origin_ + ": key '" + key + "' must be an unsigned integer");
    return v;
}

std::vector<double> KvReader::get_double_list(const std::string& key,
                                              const std::vector<double>& fallback) {
    seen_.insert(key);
    if (!kv_.count(key)) return fallback;
    return parse_double_list(raw(key), origin_ + ": key '" + key + "'");
}

std::vector<std::string> KvReader::get_string_list(const std::string& key,
                                                   const std::vector<std::string>& fallback) {
    seen_.insert(key);
    if (!kv_.count(key)) return fallback;
    return split_list(raw(key));
}

void KvReader::reject_unknown() const {
    for (const auto& [key, value] : kv_) {
        if (!seen_.count(key))
            throw ConfigError(origin_ + ": unknown key '" + key + "'");
    }
}

TrainConfig train_config_from_kv(KvReader& kv) {
    TrainConfig cfg;
    cfg.method = method_from_name(kv.get_string("method", "advshift"));
    cfg.adversary.r = kv.get_double("r", cfg.adversary.r);
    if (kv.has("gamma_c") && !kv.has("lambda")) {
        // Keep the 2 gamma_c lambda = 1 convention when only one is given.
        cfg.adversary = AdversaryConfig::with_convention(cfg.adversary.r,
                                                         kv.get_double("gamma_c", 1.0));
    } else {
        cfg.adversary.gamma_c = kv.get_double("gamma_c", cfg.adversary.gamma_c);
        cfg.adversary.lambda = kv.get_double("lambda", cfg.adversary.lambda);
    }
    if (kv.has("eta_pi")) cfg.eta_pi_override = kv.get_double("eta_pi", 0.0);
    cfg.adversary.epsilon = kv.get_double("epsilon", cfg.adversary.epsilon);
    cfg.adversary.clip = kv.get_double("clip", cfg.adversary.clip);
    cfg.adversary.beta = kv.get_double("beta", cfg.adversary.beta);
    cfg.theta_lr = kv.get_double("theta_lr", cfg.theta_lr);
    cfg.momentum = kv.get_double("momentum", cfg.momentum);
    cfg.lr_decay = kv.get_double("lr_decay", cfg.lr_decay);
    cfg.batch_size = kv.get_size("batch", cfg.batch_size);
    cfg.epochs = kv.get_size("epochs", cfg.epochs);
    cfg.seed = kv.get_u64("seed", cfg.seed);
    cfg.arch = arch_from_name(kv.get_string("arch", "linear"));
    cfg.hidden = kv.get_size("hidden", cfg.hidden);
    cfg.agnostic_lr = kv.get_double("agnostic_lr", cfg.agnostic_lr);
    cfg.fixed_pi = kv.get_double_list("fixed_pi", {});
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    KvReader kv(parse_kv_file(path), path);
    TrainConfig cfg = train_config_from_kv(kv);
    kv.reject_unknown();
    return cfg;
}

SynthConfig synth_config_from_kv(KvReader& kv) {
    SynthConfig cfg;
    const std::string synth = kv.get_string("synth", "false");
    if (synth != "true" && synth != "1")
        throw ConfigError(kv.origin() + ": synthetic spec needs 'synth = true'");
    cfg.n_classes = kv.get_size("classes", cfg.n_classes);
    cfg.dim = kv.get_size("dim", cfg.dim);
    cfg.n = kv.get_size("n", cfg.n);
    cfg.separation = kv.get_double("separation", cfg.separation);
    cfg.noise_scales = kv.get_double_list("noise", {});
    cfg.marginal = kv.get_double_list("marginal", {});
    cfg.seed = kv.get_u64("seed", cfg.seed);
    return cfg;
}

Dataset load_data_any(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string first_line;
    std::getline(in, first_line);
    in.close();
    if (first_line.rfind("label", 0) == 0) return load_csv(path);
    KvReader kv(parse_kv_file(path), path);
    SynthConfig cfg = synth_config_from_kv(kv);
    kv.reject_unknown();
    return gaussian_mixture_dataset(cfg);
}

}  // namespace advshift
