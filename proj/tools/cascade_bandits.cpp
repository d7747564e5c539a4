#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cascade/harness.hpp"
#include "cascade/lowerbound.hpp"
#include "cascade/reporting.hpp"
#include "cascade/verify.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

int cmd_run(const std::string& config_path, std::string out_dir, int threads) {
    nlohmann::json cfg = load_json(config_path);
    if (out_dir.empty()) out_dir = cfg.value("output_dir", std::string("out"));
    cascade::PreparedExperiment exp = cascade::prepare_experiment(cfg);
    cascade::ExperimentResult res = cascade::run_experiment(exp, threads);
    std::string table = cascade::emit_report(res, out_dir);
    std::cout << table;
    std::cout << "wrote result.json, results.csv, trajectories.csv, regret.svg to " << out_dir
              << "\n";
    return 0;
}

int cmd_report(const std::string& result_path, const std::string& out_dir) {
    cascade::ExperimentResult res = cascade::result_from_json(load_json(result_path));
    if (!out_dir.empty()) {
        std::cout << cascade::emit_report(res, out_dir);
        std::cout << "re-emitted artifacts to " << out_dir << "\n";
    } else {
        std::cout << cascade::format_table(res);
    }
    return 0;
}

int cmd_verify(const std::string& json_path) {
    auto checks = cascade::run_all_checks();
    bool all = true;
    size_t width = 0;
    for (const auto& c : checks) width = std::max(width, c.name.size());
    for (const auto& c : checks) {
        all = all && c.pass;
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name;
        if (!c.detail.empty()) {
            std::cout << std::string(width + 2 - c.name.size(), ' ') << c.detail;
        }
        std::cout << "\n";
    }
    std::cout << (all ? "all checks passed\n" : "some checks FAILED\n");
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        if (!out) throw std::runtime_error("cannot write " + json_path);
        out << cascade::checks_to_json(checks).dump(2) << "\n";
    }
    return all ? 0 : 1;
}

int cmd_features(const std::string& train_path, int d, int K, const std::string& out_path) {
    cascade::Matrix a = cascade::load_training_csv(train_path);
    cascade::GeneratedFeatures gen = cascade::generate_features(a, d, K);
    cascade::save_features(gen.features, out_path);
    std::cout << "features: d=" << d << " L=" << gen.features.L << " K=" << K
              << " scale=" << gen.scale << " -> " << out_path << "\n";
    return 0;
}

int cmd_lowerbound(int L, int K, std::int64_t T, int grid) {
    cascade::MinimaxBound b = cascade::minimax_bound(L, K, T, grid);
    std::cout << "regret lower bound for L=" << L << " K=" << K << " T=" << T << ": " << b.value
              << " (optimizing epsilon " << b.epsilon << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cascading-bandit simulation and benchmark harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir, result_path, json_path, train_path, feat_out = "features.json";
    int threads = 0, d = 2, K = 2, L = 16, grid = 10000;
    std::int64_t T = 10000;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "experiment config JSON")->required();
    run->add_option("--out", out_dir, "output directory (default: config output_dir or 'out')");
    run->add_option("--threads", threads, "worker pool size (default: env or hardware)");

    auto* report = app.add_subcommand("report", "print the table for a stored result");
    report->add_option("result", result_path, "result JSON from a previous run")->required();
    report->add_option("--out", out_dir, "also re-emit CSV/SVG artifacts here");

    auto* verify = app.add_subcommand("verify", "run the property suites");
    verify->add_option("--json", json_path, "write a machine-readable report here");

    auto* features = app.add_subcommand("features", "learn item features from click history");
    features->add_option("--train", train_path, "0/1 training matrix CSV, rows = users")->required();
    features->add_option("--d", d, "feature dimension")->required();
    features->add_option("--K", K, "list length the norms are scaled for")->required();
    features->add_option("--out", feat_out, "output feature JSON");

    auto* lower = app.add_subcommand("lowerbound", "evaluate the minimax regret lower bound");
    lower->add_option("--L", L, "ground set size")->required();
    lower->add_option("--K", K, "list length")->required();
    lower->add_option("--T", T, "horizon")->required();
    lower->add_option("--grid", grid, "epsilon grid points");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, threads);
        if (report->parsed()) return cmd_report(result_path, out_dir);
        if (verify->parsed()) return cmd_verify(json_path);
        if (features->parsed()) return cmd_features(train_path, d, K, feat_out);
        if (lower->parsed()) return cmd_lowerbound(L, K, T, grid);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
