#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cascade/env.hpp"
#include "cascade/linear.hpp"
#include "cascade/policies.hpp"
#include "cascade/rng.hpp"

namespace cascade {

// Block-structured instance of the experiment protocol: K items at w1, K at
// w2, the remaining L-2K at w3.
inline ProblemInstance generate_synthetic_instance(int L, int K, double w1, double w2,
                                                   double w3) {
    if (L < 2 * K)
        throw std::invalid_argument("generate_synthetic_instance: requires L >= 2K");
    Weights w(L, w3);
    for (int i = 0; i < K; ++i) w[i] = w1;
    for (int i = K; i < 2 * K; ++i) w[i] = w2;
    return ProblemInstance(L, K, std::move(w));
}

// m x L matrix of independent Bernoulli(w(j)) clicks, the historical data the
// feature generator learns from.
inline Matrix sample_training_matrix(const ProblemInstance& inst, int m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("sample_training_matrix: m >= 1 required");
    Matrix a(m, inst.L);
    Rng rng(seed);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < inst.L; ++j) a(i, j) = rng.bernoulli(inst.w[j]) ? 1.0 : 0.0;
    return a;
}

struct PolicyConfig {
    std::string name;
    double lambda = 0.04;       // lints-cascade
    double sigma = 1.0;         // cascade-linucb / cascade-lints
    double delta = 0.1;         // cascade-linucb
    int d = 2;                  // linear policies without an explicit feature file
    std::string features_file;  // optional per-policy feature source

    bool is_linear() const {
        return name == "lints-cascade" || name == "cascade-linucb" || name == "cascade-lints";
    }

    std::string label() const {
        if (name == "lints-cascade") {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "lints-cascade(%g)", lambda);
            return buf;
        }
        return name;
    }
};

struct PreparedPolicy {
    PolicyConfig cfg;
    std::string label;
    std::shared_ptr<const FeatureMatrix> features;  // null for tabular policies
};

struct PreparedExperiment {
    ProblemInstance instance;
    std::vector<PreparedPolicy> policies;
    std::int64_t horizon = 0;
    int runs = 1;
    std::uint64_t base_seed = 1;
    std::vector<std::int64_t> checkpoints;
    double error_bar_scale = 1.0;
    nlohmann::json raw_config;
};

inline std::vector<std::int64_t> default_checkpoints(std::int64_t horizon, int points = 100) {
    std::vector<std::int64_t> cp;
    double log_t = std::log(static_cast<double>(horizon));
    for (int i = 0; i < points; ++i) {
        double f = points == 1 ? 1.0 : static_cast<double>(i) / (points - 1);
        auto t = static_cast<std::int64_t>(std::llround(std::exp(f * log_t)));
        t = std::min(horizon, std::max<std::int64_t>(1, t));
        if (cp.empty() || t > cp.back()) cp.push_back(t);
    }
    if (cp.empty() || cp.back() != horizon) cp.push_back(horizon);
    return cp;
}

inline std::unique_ptr<Policy> make_policy(const PreparedPolicy& p, const ProblemInstance& inst) {
    const std::string& n = p.cfg.name;
    if (n == "ts-cascade") return std::make_unique<TsCascade>(inst.L, inst.K);
    if (n == "cts") return std::make_unique<Cts>(inst.L, inst.K);
    if (n == "cascade-ucb1") return std::make_unique<CascadeUcb1>(inst.L, inst.K);
    if (n == "cascade-klucb") return std::make_unique<CascadeKlUcb>(inst.L, inst.K);
    if (n == "oracle") return std::make_unique<OraclePolicy>(inst.w, inst.K);
    if (n == "lints-cascade") return std::make_unique<LinTsCascade>(p.features, p.cfg.lambda);
    if (n == "cascade-linucb")
        return std::make_unique<CascadeLinUcb>(p.features, p.cfg.sigma, p.cfg.delta);
    if (n == "cascade-lints") return std::make_unique<CascadeLinTs>(p.features, p.cfg.sigma);
    throw std::runtime_error("config: unknown policy name '" + n + "'");
}

inline ProblemInstance instance_from_config(const nlohmann::json& spec,
                                            std::shared_ptr<const FeatureMatrix>* linear_features) {
    if (spec.contains("file")) return load_instance(spec.at("file").get<std::string>());
    if (spec.contains("synthetic")) {
        const auto& s = spec.at("synthetic");
        return generate_synthetic_instance(s.at("L").get<int>(), s.at("K").get<int>(),
                                           s.at("w1").get<double>(), s.at("w2").get<double>(),
                                           s.at("w3").get<double>());
    }
    if (spec.contains("linear")) {
        const auto& s = spec.at("linear");
        FeatureMatrix f = load_features(s.at("features").get<std::string>());
        LinearInstance li(std::move(f), s.at("beta").get<std::vector<double>>());
        *linear_features = std::make_shared<const FeatureMatrix>(li.features);
        return li.induced_instance();
    }
    if (spec.contains("w")) return instance_from_json(spec);
    throw std::runtime_error("config: unrecognized instance spec");
}

// Resolve the config into a runnable experiment: build the instance, draw the
// shared training matrix if linear policies need learned features, and attach
// a feature matrix to every linear policy.
inline PreparedExperiment prepare_experiment(const nlohmann::json& cfg) {
    PreparedExperiment exp;
    exp.raw_config = cfg;
    std::shared_ptr<const FeatureMatrix> instance_features;
    exp.instance = instance_from_config(cfg.at("instance"), &instance_features);
    exp.horizon = cfg.at("T").get<std::int64_t>();
    exp.runs = cfg.at("runs").get<int>();
    exp.base_seed = cfg.value("base_seed", 1ULL);
    exp.error_bar_scale = cfg.value("error_bar_scale", 1.0);
    if (exp.horizon < 1 || exp.runs < 1)
        throw std::runtime_error("config: T >= 1 and runs >= 1 required");
    if (cfg.contains("checkpoints")) {
        exp.checkpoints = cfg.at("checkpoints").get<std::vector<std::int64_t>>();
        std::sort(exp.checkpoints.begin(), exp.checkpoints.end());
        for (std::int64_t t : exp.checkpoints)
            if (t < 1 || t > exp.horizon) throw std::runtime_error("config: checkpoint outside 1..T");
        if (exp.checkpoints.empty() || exp.checkpoints.back() != exp.horizon)
            exp.checkpoints.push_back(exp.horizon);
    } else {
        exp.checkpoints = default_checkpoints(exp.horizon);
    }

    std::vector<PolicyConfig> pcs;
    for (const auto& pj : cfg.at("policies")) {
        PolicyConfig pc;
        pc.name = pj.at("name").get<std::string>();
        pc.lambda = pj.value("lambda", pc.lambda);
        pc.sigma = pj.value("sigma", pc.sigma);
        pc.delta = pj.value("delta", pc.delta);
        pc.d = pj.value("d", pc.d);
        pc.features_file = pj.value("features", std::string());
        pcs.push_back(std::move(pc));
    }
    if (pcs.empty()) throw std::runtime_error("config: empty policy list");

    // One shared training matrix per experiment; features per distinct d.
    Matrix a_train;
    bool have_train = false;
    auto features_for_d = [&](int d) {
        if (!have_train) {
            if (!cfg.contains("training"))
                throw std::runtime_error(
                    "config: linear policy needs a 'training' block or a feature file");
            int m = cfg.at("training").at("m").get<int>();
            a_train = sample_training_matrix(exp.instance, m,
                                             mix64(exp.base_seed ^ 0x747261696eULL));
            have_train = true;
        }
        return std::make_shared<const FeatureMatrix>(
            generate_features(a_train, d, exp.instance.K).features);
    };
    std::vector<std::pair<int, std::shared_ptr<const FeatureMatrix>>> by_d;

    for (auto& pc : pcs) {
        PreparedPolicy pp;
        pp.cfg = pc;
        pp.label = pc.label();
        if (pc.is_linear()) {
            if (!pc.features_file.empty()) {
                pp.features = std::make_shared<const FeatureMatrix>(load_features(pc.features_file));
            } else if (instance_features) {
                pp.features = instance_features;
            } else {
                auto it = std::find_if(by_d.begin(), by_d.end(),
                                       [&](const auto& e) { return e.first == pc.d; });
                if (it == by_d.end()) {
                    by_d.emplace_back(pc.d, features_for_d(pc.d));
                    it = std::prev(by_d.end());
                }
                pp.features = it->second;
            }
            if (pp.features->L != exp.instance.L)
                throw std::runtime_error("config: feature matrix item count != instance L");
        }
        exp.policies.push_back(std::move(pp));
    }

    // Disambiguate duplicate labels so CSV rows stay keyed.
    for (size_t i = 0; i < exp.policies.size(); ++i) {
        int dup = 0;
        for (size_t j = 0; j < i; ++j)
            if (exp.policies[j].label == exp.policies[i].label) ++dup;
        if (dup > 0) exp.policies[i].label += "#" + std::to_string(dup + 1);
    }
    return exp;
}

struct RunResult {
    int run = 0;
    double final_regret = 0.0;
    double realized_reward = 0.0;
    double seconds = 0.0;  // wall clock; excluded from determinism guarantees
    std::vector<std::pair<std::int64_t, double>> trajectory;
};

struct PolicyResult {
    std::string label;
    std::vector<RunResult> runs;
    double mean_regret = 0.0;
    double std_regret = 0.0;
    double mean_seconds = 0.0;
};

struct ExperimentResult {
    nlohmann::json config;
    std::int64_t horizon = 0;
    int runs = 0;
    std::vector<std::int64_t> checkpoints;
    double error_bar_scale = 1.0;
    std::vector<PolicyResult> policies;
};

inline RunResult run_cell(const PreparedExperiment& exp, int policy_index, int run_index) {
    RunResult rr;
    rr.run = run_index;
    const auto t0 = std::chrono::steady_clock::now();
    auto policy = make_policy(exp.policies[policy_index], exp.instance);
    Rng rng(derive_seed(exp.base_seed, static_cast<std::uint64_t>(policy_index),
                        static_cast<std::uint64_t>(run_index)));
    RegretAccumulator acc(exp.instance);
    size_t next_cp = 0;
    for (std::int64_t t = 1; t <= exp.horizon; ++t) {
        RankedList s = policy->select(t, rng);
        Feedback f = simulate_step(exp.instance, s, rng);
        policy->update(s, f);
        acc.step(s, f);
        if (next_cp < exp.checkpoints.size() && t == exp.checkpoints[next_cp]) {
            rr.trajectory.emplace_back(t, acc.cum_regret());
            ++next_cp;
        }
    }
    rr.final_regret = acc.cum_regret();
    rr.realized_reward = acc.realized_reward();
    rr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rr;
}

// Threads honor, in order: the explicit argument, CASCADE_BANDITS_THREADS,
// then hardware concurrency.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CASCADE_BANDITS_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Execute every (policy, run) cell. Cells own their state and rng stream, so
// the assembled result is identical for any thread count.
inline ExperimentResult run_experiment(const PreparedExperiment& exp, int threads = 0) {
    threads = resolve_threads(threads);
    const int n_policies = static_cast<int>(exp.policies.size());
    const int cells = n_policies * exp.runs;
    std::vector<RunResult> slots(cells);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            int c = next.fetch_add(1);
            if (c >= cells) return;
            slots[c] = run_cell(exp, c / exp.runs, c % exp.runs);
        }
    };
    if (threads <= 1 || cells == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < std::min(threads, cells); ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ExperimentResult res;
    res.config = exp.raw_config;
    res.horizon = exp.horizon;
    res.runs = exp.runs;
    res.checkpoints = exp.checkpoints;
    res.error_bar_scale = exp.error_bar_scale;
    for (int p = 0; p < n_policies; ++p) {
        PolicyResult pr;
        pr.label = exp.policies[p].label;
        double sum = 0.0, sum_sq = 0.0, sum_sec = 0.0;
        for (int r = 0; r < exp.runs; ++r) {
            RunResult& rr = slots[p * exp.runs + r];
            sum += rr.final_regret;
            sum_sq += rr.final_regret * rr.final_regret;
            sum_sec += rr.seconds;
            pr.runs.push_back(std::move(rr));
        }
        pr.mean_regret = sum / exp.runs;
        double var = std::max(0.0, sum_sq / exp.runs - pr.mean_regret * pr.mean_regret);
        pr.std_regret = std::sqrt(var);
        pr.mean_seconds = sum_sec / exp.runs;
        res.policies.push_back(std::move(pr));
    }
    return res;
}

}  // namespace cascade
