// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Run with criterion numbers as arguments to execute a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cascade/analysis.hpp"
#include "cascade/env.hpp"
#include "cascade/harness.hpp"
#include "cascade/linalg.hpp"
#include "cascade/linear.hpp"
#include "cascade/lowerbound.hpp"
#include "cascade/policies.hpp"
#include "cascade/reporting.hpp"
#include "cascade/verify.hpp"

using namespace cascade;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

RankedList random_list(Rng& rng, int L, int K) {
    std::vector<int> pool(L);
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < K; ++k)
        std::swap(pool[k], pool[k + static_cast<int>(rng.uniform() * (L - k))]);
    pool.resize(K);
    return RankedList(std::move(pool));
}

// 1. Both telescoping forms equal the direct reward difference to 1e-12.
Outcome criterion_decomposition() {
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        int K = 1 + static_cast<int>(rng.uniform() * 6);
        int L = K + static_cast<int>(rng.uniform() * 6);
        Weights w(L), wp(L);
        for (double& x : w) x = rng.uniform();
        for (double& x : wp) x = rng.uniform();
        RewardDecomposition d =
            reward_decomposition(random_list(rng, L, K), random_list(rng, L, K), w, wp);
        worst = std::max({worst, std::abs(d.form1 - d.direct), std::abs(d.form2 - d.direct)});
    }
    return {worst < 1e-12, "max discrepancy " + fmt(worst) + " over 1000 tuples"};
}

// 2. optimal_reward equals the exhaustive maximum over ordered K-subsets.
Outcome criterion_bruteforce_optimality() {
    Rng rng(102);
    long long checked = 0;
    for (int L = 1; L <= 6; ++L)
        for (int K = 1; K <= L; ++K)
            for (int rep = 0; rep < 200; ++rep) {
                Weights w(L);
                for (double& x : w) {
                    double u = rng.uniform();
                    if (rep % 4 == 0) u = std::round(u * 8.0) / 8.0;  // force ties
                    if (rep % 7 == 0 && rng.uniform() < 0.3) u = rng.uniform() < 0.5 ? 0.0 : 1.0;
                    x = u;
                }
                ProblemInstance inst(L, K, w);
                double opt = optimal_reward(inst);
                double best = 0.0;
                for_each_ordered_subset(L, K, [&](const RankedList& s) {
                    best = std::max(best, expected_reward(s, w));
                });
                if (best != opt) return {false, "mismatch at L=" + std::to_string(L) +
                                                    " K=" + std::to_string(K)};
                ++checked;
            }
    return {true, std::to_string(checked) + " instances, exact equality"};
}

// 3. Exact gap dominates 2Q*eps/(e^4 K) for every ordered 5-subset and every ell.
Outcome criterion_gap_dominance() {
    HardInstanceFamily fam(10, 5, 0.05);
    double min_slack = 1e300;
    long long subsets = 0;
    for (int ell = 1; ell <= fam.L; ++ell) {
        Weights w = weights_for(fam, ell);
        double opt = expected_reward(optimal_list_for(fam, ell), w);
        bool ok = true;
        for_each_ordered_subset(fam.L, fam.K, [&](const RankedList& s) {
            double slack = (opt - expected_reward(s, w)) - gap_lower_bound(fam, s, ell);
            min_slack = std::min(min_slack, slack);
            ok = ok && slack >= 0.0;
            if (ell == 1) ++subsets;
        });
        if (!ok) return {false, "violated at ell=" + std::to_string(ell)};
    }
    return {min_slack >= 0.0, std::to_string(subsets) + " subsets x 10 instances, min slack " +
                                  fmt(min_slack)};
}

// 4. kl_budget(eps)/eps^2 within 1% of (K/L) 2K/(K-1) at eps = 1e-4.
Outcome criterion_kl_budget_limit() {
    std::string detail;
    for (int K : {5, 8, 16}) {
        int L = 2 * K;
        double limit = static_cast<double>(K) / L * 2.0 * K / (K - 1.0);
        double ratio = kl_budget(HardInstanceFamily(L, K, 1e-4)) / 1e-8 / limit;
        detail += "K=" + std::to_string(K) + ": " + fmt(ratio) + "  ";
        if (std::abs(ratio - 1.0) >= 0.01) return {false, detail};
    }
    return {true, detail + "(ratios to the series limit)"};
}

// 5. TS-Cascade regret grows like sqrt(T): mean Reg(2T)/Reg(T) in [1.2, 1.8].
Outcome criterion_sqrt_t_scaling() {
    ProblemInstance inst = generate_synthetic_instance(64, 4, 0.2, 0.1, 0.05);
    const std::int64_t half = 10000;
    double ratio_sum = 0.0;
    for (int run = 0; run < 20; ++run) {
        Rng rng(derive_seed(2024, 0, static_cast<std::uint64_t>(run)));
        TsCascade policy(inst.L, inst.K);
        RegretAccumulator acc(inst);
        double at_half = 0.0;
        for (std::int64_t t = 1; t <= 2 * half; ++t) {
            RankedList s = policy.select(t, rng);
            Feedback f = simulate_step(inst, s, rng);
            policy.update(s, f);
            acc.step(s, f);
            if (t == half) at_half = acc.cum_regret();
        }
        ratio_sum += acc.cum_regret() / at_half;
    }
    double mean_ratio = ratio_sum / 20.0;
    return {mean_ratio >= 1.2 && mean_ratio <= 1.8,
            "mean Reg(2T)/Reg(T) = " + fmt(mean_ratio) + " over 20 runs"};
}

// 6. Desk-scale benchmark ordering: UCB1 > CTS > TS-Cascade, and
//    LinTS-Cascade(0.04) at most a fifth of TS-Cascade.
Outcome criterion_benchmark_ordering() {
    nlohmann::json cfg = nlohmann::json::parse(R"({
        "instance": {"synthetic": {"L": 256, "K": 2, "w1": 0.2, "w2": 0.1, "w3": 0.05}},
        "policies": [{"name": "cascade-ucb1"},
                     {"name": "cts"},
                     {"name": "ts-cascade"},
                     {"name": "lints-cascade", "lambda": 0.04, "d": 2}],
        "T": 10000,
        "runs": 10,
        "base_seed": 7,
        "training": {"m": 200}
    })");
    ExperimentResult res = run_experiment(prepare_experiment(cfg));
    double ucb1 = res.policies[0].mean_regret;
    double cts = res.policies[1].mean_regret;
    double ts = res.policies[2].mean_regret;
    double lints = res.policies[3].mean_regret;
    bool pass = ucb1 > cts && cts > ts && lints <= ts / 5.0;
    return {pass, "UCB1 " + fmt(ucb1) + " > CTS " + fmt(cts) + " > TS " + fmt(ts) +
                      "; LinTS(0.04) " + fmt(lints) + " <= TS/5 " + fmt(ts / 5.0)};
}

// 7. Concentration event frequency dominates 1 - 3L/(t+1)^3 at t in {100, 1000}.
Outcome criterion_concentration() {
    ProblemInstance inst(8, 2, Weights(8, 0.3));
    ConcentrationConfig cfg;
    cfg.replications = 2000;
    cfg.checkpoints = {100, 1000};
    cfg.base_seed = 107;
    auto rows = concentration_rate(inst, cfg);
    std::string detail;
    bool pass = true;
    for (const auto& r : rows) {
        pass = pass && r.pass;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "t=%lld: %.6f >= %.6f  ", static_cast<long long>(r.t),
                      r.frequency, r.floor);
        detail += buf;
    }
    return {pass, detail};
}

// 8. SVD kernel against the Jacobi eigendecomposition oracle.
Outcome criterion_svd() {
    Rng rng(108);
    Matrix a(20, 30);
    for (int r = 0; r < 5; ++r) {
        std::vector<double> u(20), v(30);
        for (double& x : u) x = rng.normal();
        for (double& x : v) x = rng.normal();
        for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 30; ++j) a(i, j) += u[i] * v[j];
    }
    SvdResult svd = truncated_svd(a, 5);
    double recon = 0.0;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 30; ++j) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k) s += svd.u(i, k) * svd.s[k] * svd.v(j, k);
            recon += (a(i, j) - s) * (a(i, j) - s);
        }
    recon = std::sqrt(recon);
    EigenSym eig = jacobi_eigen_sym(multiply(a.transposed(), a));
    double sv_err = 0.0;
    for (int k = 0; k < 5; ++k)
        sv_err = std::max(sv_err, std::abs(svd.s[k] - std::sqrt(std::max(0.0, eig.values[k]))));
    return {recon <= 1e-8 && sv_err <= 1e-8,
            "reconstruction " + fmt(recon) + ", singular-value error " + fmt(sv_err)};
}

// 9. Covariance of rho matches lambda^2 v_t^2 K M^{-1} within 5 MC standard errors.
Outcome criterion_sampling_law() {
    const int d = 3, K = 4;
    const double lambda = 0.5;
    const std::int64_t t = 100;
    Rng rng(109);
    Matrix x(d, 6);
    for (double& e : x.a) e = rng.normal() * 0.2;
    double cap = 1.0 / std::sqrt(static_cast<double>(K));
    for (int i = 0; i < 6; ++i) {
        double n = 0.0;
        for (int r = 0; r < d; ++r) n += x(r, i) * x(r, i);
        n = std::sqrt(n);
        if (n > cap)
            for (int r = 0; r < d; ++r) x(r, i) *= cap / n;
    }
    auto features = std::make_shared<const FeatureMatrix>(std::move(x), K);
    LinTsCascade policy(features, lambda);
    for (int step = 0; step < 60; ++step) {
        RankedList s({step % 6, (step + 1) % 6, (step + 2) % 6, (step + 3) % 6});
        Feedback f;
        f.realized_clicks = {0, 1};
        f.click_position = 2;
        policy.update(s, f);
    }
    const double v_t = 3.0 * std::sqrt(d * std::log(static_cast<double>(t)));
    const double c2 = lambda * lambda * v_t * v_t * K;
    Matrix target = policy.model().gram_inverse();
    for (double& e : target.a) e *= c2;

    const int n = 1000000;
    std::vector<double> mean(d, 0.0);
    Matrix second(d, d);
    for (int draw = 0; draw < n; ++draw) {
        std::vector<double> xi(d);
        for (double& z : xi) z = rng.normal();
        std::vector<double> rho = policy.sample_rho(xi, t);
        for (int i = 0; i < d; ++i) {
            mean[i] += rho[i];
            for (int j = 0; j < d; ++j) second(i, j) += rho[i] * rho[j];
        }
    }
    double worst_z = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double cov = second(i, j) / n - mean[i] / n * mean[j] / n;
            double se = std::sqrt((target(i, i) * target(j, j) + target(i, j) * target(i, j)) / n);
            worst_z = std::max(worst_z, std::abs(cov - target(i, j)) / se);
        }
    return {worst_z <= 5.0, "worst covariance z-score " + fmt(worst_z) + " over 10^6 draws"};
}

// 10. Byte-identical CSV/JSON across thread counts (timing fields excluded).
Outcome criterion_determinism() {
    nlohmann::json cfg = nlohmann::json::parse(R"({
        "instance": {"synthetic": {"L": 32, "K": 2, "w1": 0.2, "w2": 0.1, "w3": 0.05}},
        "policies": [{"name": "ts-cascade"},
                     {"name": "cts"},
                     {"name": "lints-cascade", "lambda": 0.04, "d": 2}],
        "T": 500,
        "runs": 4,
        "base_seed": 99,
        "training": {"m": 50}
    })");
    auto emit = [&cfg](int threads, const fs::path& dir) {
        fs::remove_all(dir);
        ExperimentResult res = run_experiment(prepare_experiment(cfg), threads);
        emit_report(res, dir.string());
    };
    fs::path d1 = fs::temp_directory_path() / "cascade_acc_t1";
    fs::path d4 = fs::temp_directory_path() / "cascade_acc_t4";
    emit(1, d1);
    emit(4, d4);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto strip_seconds_col = [](const std::string& csv) {
        std::string out;
        std::stringstream ss(csv);
        std::string line;
        while (std::getline(ss, line)) {
            out += line.substr(0, line.rfind(','));
            out += '\n';
        }
        return out;
    };
    auto mask_json = [](const std::string& text) {
        nlohmann::json j = nlohmann::json::parse(text);
        for (auto& p : j["policies"]) {
            p["mean_seconds"] = 0.0;
            for (auto& r : p["runs"]) r["seconds"] = 0.0;
        }
        return j.dump();
    };
    bool results_eq =
        strip_seconds_col(slurp(d1 / "results.csv")) == strip_seconds_col(slurp(d4 / "results.csv"));
    bool traj_eq = slurp(d1 / "trajectories.csv") == slurp(d4 / "trajectories.csv");
    bool json_eq = mask_json(slurp(d1 / "result.json")) == mask_json(slurp(d4 / "result.json"));
    bool svg_eq = slurp(d1 / "regret.svg") == slurp(d4 / "regret.svg");
    fs::remove_all(d1);
    fs::remove_all(d4);
    return {results_eq && traj_eq && json_eq && svg_eq,
            std::string("results.csv ") + (results_eq ? "ok" : "DIFF") + ", trajectories.csv " +
                (traj_eq ? "ok" : "DIFF") + ", result.json " + (json_eq ? "ok" : "DIFF") +
                ", regret.svg " + (svg_eq ? "ok" : "DIFF")};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> fn;
    };
    std::vector<Criterion> criteria = {
        {1, "reward-decomposition oracle (1e-12)", criterion_decomposition},
        {2, "brute-force optimality (L <= 6, exact)", criterion_bruteforce_optimality},
        {3, "gap-bound dominance (L=10, K=5, eps=0.05)", criterion_gap_dominance},
        {4, "KL budget limit (1% at eps=1e-4)", criterion_kl_budget_limit},
        {5, "sqrt(T) scaling of TS-Cascade [1.2, 1.8]", criterion_sqrt_t_scaling},
        {6, "desk-scale benchmark ordering", criterion_benchmark_ordering},
        {7, "concentration diagnostic vs analytic floor", criterion_concentration},
        {8, "SVD kernel vs Jacobi oracle (1e-8)", criterion_svd},
        {9, "LinTS sampling law (5 MC standard errors)", criterion_sampling_law},
        {10, "determinism across thread counts", criterion_determinism},
    };

    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end())
            continue;
        auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %02d %s: %s (%.2fs)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures) std::printf("%d criterion(s) FAILED\n", failures);
    else std::printf("all criteria passed\n");
    return failures;
}
