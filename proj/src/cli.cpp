#include "advshift/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "advshift/config.hpp"
#include "advshift/dataset.hpp"
#include "advshift/diagnostics.hpp"
#include "advshift/errors.hpp"
#include "advshift/evaluator.hpp"
#include "advshift/projection.hpp"
#include "advshift/rng.hpp"
#include "advshift/trainer.hpp"

namespace fs = std::filesystem;

namespace advshift {

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string join_path(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

struct CommonArgs {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int do_train(const CommonArgs& a) {
    TrainConfig cfg = load_train_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    const Dataset data = load_data_any(a.data);
    fs::create_directories(a.out);
    const TrainResult result = train(cfg, data);
    save_checkpoint(result.params, join_path(a.out, "checkpoint.txt"));
    save_history_csv(result.history, join_path(a.out, "history.csv"));
    const EpochRecord& last = result.history.epochs.back();
    std::cout << "trained " << method_name(cfg.method) << " for " << cfg.epochs
              << " epochs; final mean loss " << fmt(last.mean_loss) << ", KL(pi||p_emp) "
              << fmt(last.kl_pi_pemp) << "\n"
              << "wrote " << join_path(a.out, "checkpoint.txt") << " and "
              << join_path(a.out, "history.csv") << "\n";
    return 0;
}

int do_eval(const std::string& checkpoint, const std::string& data_path,
            const std::string& taus_text, const std::string& out) {
    const ModelParams params = load_checkpoint(checkpoint);
    const Dataset data = load_data_any(data_path);
    const std::vector<double> taus = parse_double_list(taus_text, "--taus");
    if (taus.empty()) throw ConfigError("--taus: need at least one threshold");
    const ErrorProfile profile = per_class_errors(params, data);
    const ShiftCurve curve = shift_sweep(profile, taus);
    fs::create_directories(out);
    save_profile_csv(profile, join_path(out, "profile.csv"));
    save_curve_csv(curve, join_path(out, "curve.csv"));
    for (const ShiftPoint& pt : curve.points)
        std::cout << "tau " << fmt(pt.tau) << " -> worst-case error " << fmt(pt.value) << "\n";
    std::cout << "wrote " << join_path(out, "profile.csv") << " and "
              << join_path(out, "curve.csv") << "\n";
    return 0;
}

struct SweepJob {
    std::string method;
    double r = 0.1;
    double clip = 2.0;
    double eps = 1e-3;
    std::uint64_t seed = 1;
};

struct SweepRow {
    SweepJob job;
    double tau = 0.0;
    double value = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

std::vector<SweepRow> run_sweep_job(const SweepJob& job, const TrainConfig& base,
                                    const Dataset& train_data, const Dataset& eval_data,
                                    const std::vector<double>& taus) {
    std::vector<SweepRow> rows;
    rows.reserve(taus.size());
    try {
        TrainConfig cfg = base;
        cfg.method = method_from_name(job.method);
        cfg.adversary.r = job.r;
        cfg.adversary.clip = job.clip;
        cfg.adversary.epsilon = job.eps;
        cfg.seed = job.seed;
        const TrainResult result = train(cfg, train_data);
        const ErrorProfile profile = per_class_errors(result.params, eval_data);
        for (double tau : taus)
            rows.push_back({job, tau, worst_case_value(profile, tau).value, "ok"});
    } catch (const std::exception& e) {
        rows.clear();
        for (double tau : taus) rows.push_back({job, tau,
                                                std::numeric_limits<double>::quiet_NaN(),
                                                std::string("failed: ") + sanitize(e.what())});
    }
    return rows;
}

int do_sweep(const std::string& spec_path, const std::string& data_path,
             const std::string& val_path, const std::string& out, unsigned n_threads) {
    KvReader kv(parse_kv_file(spec_path), spec_path);
    const TrainConfig base = train_config_from_kv(kv);
    const auto methods = kv.get_string_list("methods", {method_name(base.method)});
    const auto rs = kv.get_double_list("rs", {base.adversary.r});
    const auto clips = kv.get_double_list("clips", {base.adversary.clip});
    const auto epsilons = kv.get_double_list("epsilons", {base.adversary.epsilon});
    std::vector<double> seed_values = kv.get_double_list(
        "seeds", {static_cast<double>(base.seed)});
    const auto taus = kv.get_double_list("taus", {0.0, 0.5, 1.0, 2.0});
    kv.reject_unknown();
    if (taus.empty()) throw ConfigError(spec_path + ": taus must be non-empty");

    std::vector<std::uint64_t> seeds;
    for (double s : seed_values) {
        if (s < 0.0 || s != std::floor(s))
            throw ConfigError(spec_path + ": seeds must be non-negative integers");
        seeds.push_back(static_cast<std::uint64_t>(s));
    }

    const Dataset train_data = load_data_any(data_path);
    const Dataset eval_data = val_path.empty() ? train_data : load_data_any(val_path);

    std::vector<SweepJob> jobs;
    for (const std::string& m : methods)
        for (double r : rs)
            for (double clip : clips)
                for (double eps : epsilons)
                    for (std::uint64_t seed : seeds) jobs.push_back({m, r, clip, eps, seed});

    std::vector<std::vector<SweepRow>> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) break;
            results[i] = run_sweep_job(jobs[i], base, train_data, eval_data, taus);
        }
    };
    n_threads = std::max(1u, std::min<unsigned>(n_threads, jobs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    fs::create_directories(out);
    const std::string csv_path = join_path(out, "comparison.csv");
    std::ofstream csv(csv_path);
    if (!csv) throw ParseError("cannot open '" + csv_path + "' for writing");
    csv << "method,r,clip,eps,seed,tau,worst_value,status\n";
    bool any_failed = false;
    for (const auto& rows : results) {
        for (const SweepRow& row : rows) {
            csv << row.job.method << ',' << fmt(row.job.r) << ',' << fmt(row.job.clip) << ','
                << fmt(row.job.eps) << ',' << row.job.seed << ',' << fmt(row.tau) << ','
                << fmt(row.value) << ',' << row.status << "\n";
            if (row.status != "ok") any_failed = true;
        }
    }
    if (!csv) throw ParseError("failed writing '" + csv_path + "'");
    std::cout << "ran " << jobs.size() << " jobs, wrote " << csv_path << "\n";
    if (any_failed) {
        std::cerr << "error: some sweep jobs failed (see status column)\n";
        return 2;
    }
    return 0;
}

int do_project_bench(std::size_t n_classes, std::size_t trials, std::uint64_t seed,
                     const std::string& out) {
    const ProjectionBenchmark bench = projection_benchmark(n_classes, trials, seed);
    fs::create_directories(out);
    save_benchmark_csv(bench, join_path(out, "bench.csv"));
    if (bench.trials > 0) {
        std::cout << "L=" << bench.n_classes << ": projection median "
                  << fmt(bench.median_projection_ms) << " ms, mirror update median "
                  << fmt(bench.median_mirror_ms) << " ms, ratio " << fmt(bench.ratio) << "\n";
    }
    std::cout << "wrote " << join_path(out, "bench.csv") << "\n";
    return 0;
}

int do_diag(const CommonArgs& a, std::size_t samples, std::size_t theory_steps) {
    TrainConfig cfg = load_train_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    const Dataset data = load_data_any(a.data);
    if (theory_steps > 0) cfg = theory_schedule(cfg, theory_steps, data.size());
    const TrainResult result = train(cfg, data);

    DiagnosticsReport report = estimate_assumption_constants(result, data, cfg, samples,
                                                             cfg.seed);
    const double l_hat = std::max(report.smooth_hat, 1e-6);
    for (const ModelParams& params : result.epoch_params)
        report.moreau_trace.push_back(moreau_stationarity(params, data, cfg.adversary, l_hat));

    const KlRecursionReport kl = kl_recursion_check(50, 100, cfg.seed);

    fs::create_directories(a.out);
    const std::string report_path = join_path(a.out, "report.txt");
    save_report(report, report_path);
    std::ofstream extra(report_path, std::ios::app);
    extra << "kl_recursion_trials = " << kl.trials << "\n";
    extra << "kl_recursion_violations = " << kl.violations << "\n";
    extra << "kl_recursion_worst_gap = " << fmt(kl.worst_gap) << "\n";
    extra.close();

    std::cout << "sigma_hat " << fmt(report.sigma_hat) << ", G_hat " << fmt(report.g_hat)
              << " (bound " << fmt(report.g_bound) << "), R_hat " << fmt(report.r_hat)
              << " (bound " << fmt(report.r_bound) << ")\n"
              << "moreau stationarity: first " << fmt(report.moreau_trace.front()) << ", last "
              << fmt(report.moreau_trace.back()) << "\n"
              << "three-point inequality: " << kl.violations << " violations in " << kl.trials
              << " trials\n"
              << "wrote " << report_path << "\n";
    return kl.passed() ? 0 : 2;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Distributionally robust training against label shift in a KL ball"};
    app.require_subcommand(1);

    CommonArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a model per config on a dataset");
    train_cmd->add_option("--config", train_args.config, "key = value training config")
        ->required();
    train_cmd->add_option("--data", train_args.data, "dataset CSV or synthetic spec")
        ->required();
    train_cmd->add_option("--out", train_args.out, "output directory")->required();
    train_cmd->add_option("--seed", train_args.seed, "override the config seed");

    std::string eval_checkpoint, eval_data, eval_out;
    std::string eval_taus = "0,0.5,1,2,3";
    auto* eval_cmd = app.add_subcommand("eval", "Worst-case shift curve for a checkpoint");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
    eval_cmd->add_option("--data", eval_data, "dataset CSV or synthetic spec")->required();
    eval_cmd->add_option("--taus", eval_taus, "comma list of KL thresholds");
    eval_cmd->add_option("--out", eval_out, "output directory")->required();

    std::string sweep_spec, sweep_data, sweep_val, sweep_out;
    unsigned sweep_jobs = 1;
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "Grid of (method, r, clip, eps, seed) train+eval jobs");
    sweep_cmd->add_option("--spec", sweep_spec, "grid spec (train keys + list keys)")
        ->required();
    sweep_cmd->add_option("--data", sweep_data, "training dataset")->required();
    sweep_cmd->add_option("--val", sweep_val, "evaluation dataset (default: --data)");
    sweep_cmd->add_option("--out", sweep_out, "output directory")->required();
    sweep_cmd->add_option("--jobs", sweep_jobs, "worker threads");

    std::string ablate_spec, ablate_data, ablate_val, ablate_out;
    unsigned ablate_jobs = 1;
    auto* ablate_cmd = app.add_subcommand(
        "ablate", "Same grid machinery as sweep; meant for clip/epsilon grids");
    ablate_cmd->add_option("--spec", ablate_spec, "grid spec")->required();
    ablate_cmd->add_option("--data", ablate_data, "training dataset")->required();
    ablate_cmd->add_option("--val", ablate_val, "evaluation dataset (default: --data)");
    ablate_cmd->add_option("--out", ablate_out, "output directory")->required();
    ablate_cmd->add_option("--jobs", ablate_jobs, "worker threads");

    std::size_t bench_classes = 1000;
    std::size_t bench_trials = 5;
    std::uint64_t bench_seed = 1;
    std::string bench_out;
    auto* bench_cmd = app.add_subcommand(
        "project-bench", "Time KL-ball projection against the mirror update");
    bench_cmd->add_option("--classes", bench_classes, "distribution size L");
    bench_cmd->add_option("--trials", bench_trials, "instances to time");
    bench_cmd->add_option("--seed", bench_seed, "instance seed");
    bench_cmd->add_option("--out", bench_out, "output directory")->required();

    CommonArgs diag_args;
    std::size_t diag_samples = 200;
    std::size_t diag_theory_steps = 0;
    auto* diag_cmd = app.add_subcommand(
        "diag", "Train, then estimate assumption constants and stationarity");
    diag_cmd->add_option("--config", diag_args.config, "training config")->required();
    diag_cmd->add_option("--data", diag_args.data, "dataset CSV or synthetic spec")
        ->required();
    diag_cmd->add_option("--out", diag_args.out, "output directory")->required();
    diag_cmd->add_option("--seed", diag_args.seed, "override the config seed");
    diag_cmd->add_option("--samples", diag_samples, "minibatch/secant sample count");
    diag_cmd->add_option("--theory-steps", diag_theory_steps,
                         "apply the T^{-3/4}/T^{1/2}/T^{-1/4} schedule for this step budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(train_cmd)) return do_train(train_args);
        if (app.got_subcommand(eval_cmd))
            return do_eval(eval_checkpoint, eval_data, eval_taus, eval_out);
        if (app.got_subcommand(sweep_cmd))
            return do_sweep(sweep_spec, sweep_data, sweep_val, sweep_out, sweep_jobs);
        if (app.got_subcommand(ablate_cmd))
            return do_sweep(ablate_spec, ablate_data, ablate_val, ablate_out, ablate_jobs);
        if (app.got_subcommand(bench_cmd))
            return do_project_bench(bench_classes, bench_trials, bench_seed, bench_out);
        if (app.got_subcommand(diag_cmd))
            return do_diag(diag_args, diag_samples, diag_theory_steps);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace advshift
