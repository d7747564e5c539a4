#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cascade/env.hpp"
#include "cascade/policies.hpp"

using namespace cascade;

namespace {

// Feed one synthetic observation of a single item.
void observe(Policy& p, int item, int w) {
    RankedList s({item});
    Feedback f;
    f.realized_clicks = {static_cast<unsigned char>(w)};
    if (w) f.click_position = 1;
    p.update(s, f);
}

std::vector<int> rank_by(const std::vector<double>& score, int K) {
    std::vector<int> idx(score.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return score[a] > score[b]; });
    idx.resize(K);
    return idx;
}

}  // namespace

TEST_CASE("top_k_by_score breaks ties by lowest index") {
    REQUIRE(top_k_by_score({1.0, 1.0, 1.0, 1.0}, 2).items == std::vector<int>{0, 1});
    REQUIRE(top_k_by_score({0.1, 0.9, 0.9, 0.2}, 3).items == std::vector<int>{1, 2, 3});
    REQUIRE_THROWS_AS(top_k_by_score({0.1}, 2), std::invalid_argument);
}

TEST_CASE("fresh TS-Cascade returns the first K items") {
    TsCascade p(6, 3);
    for (double z : {-2.0, 0.0, 1.7})
        REQUIRE(p.select_with_sample(z, 1).items == std::vector<int>{0, 1, 2});
}

TEST_CASE("TS-Cascade empirical mean update") {
    TsCascade p(4, 2);
    observe(p, 1, 0);
    observe(p, 1, 0);
    observe(p, 1, 1);
    REQUIRE_THAT(p.w_hat()[1], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
    observe(p, 1, 1);
    REQUIRE(p.w_hat()[1] == 0.5);
    REQUIRE(p.counts()[1] == 4.0);
    REQUIRE(p.w_hat()[0] == 0.0);  // untouched
    REQUIRE(p.counts()[0] == 0.0);

    observe(p, 2, 1);
    REQUIRE(p.w_hat()[2] == 1.0);
    REQUIRE(p.counts()[2] == 1.0);
}

TEST_CASE("TS-Cascade update consumes only the observed prefix") {
    TsCascade p(4, 3);
    RankedList s({0, 1, 2});
    Feedback f;
    f.click_position = 1;
    f.realized_clicks = {1};
    p.update(s, f);
    REQUIRE(p.counts()[0] == 1.0);
    REQUIRE(p.counts()[1] == 0.0);
    REQUIRE(p.counts()[2] == 0.0);
}

TEST_CASE("TS-Cascade ranking matches a scalar recomputation") {
    const int L = 5, K = 3;
    TsCascade p(L, K);
    std::vector<double> w_hat(L, 0.0), n(L, 0.0);
    Rng rng(17);
    for (int step = 0; step < 200; ++step) {
        int item = static_cast<int>(rng.uniform() * L);
        int w = rng.uniform() < 0.3 ? 1 : 0;
        observe(p, item, w);
        w_hat[item] = (n[item] * w_hat[item] + w) / (n[item] + 1.0);
        n[item] += 1.0;
    }
    for (std::int64_t t : {1, 7, 100})
        for (double z : {-1.5, -0.3, 0.0, 0.4, 2.0}) {
            std::vector<double> theta(L);
            for (int i = 0; i < L; ++i) {
                double nu = w_hat[i] * (1.0 - w_hat[i]);
                double over = std::log(t + 1.0) / (n[i] + 1.0);
                theta[i] = w_hat[i] + z * std::max(std::sqrt(nu * over), over);
            }
            REQUIRE(p.select_with_sample(z, t).items == rank_by(theta, K));
        }
}

TEST_CASE("TS-Cascade zero-noise ranking follows the empirical means") {
    TsCascade p(2, 2);
    for (int i = 0; i < 100; ++i) {
        observe(p, 0, i < 90 ? 1 : 0);
        observe(p, 1, i < 10 ? 1 : 0);
    }
    REQUIRE(p.select_with_sample(0.0, 100).items == std::vector<int>{0, 1});
}

TEST_CASE("CTS posterior counting") {
    Cts p(3, 2);
    observe(p, 0, 1);
    REQUIRE(p.alpha()[0] == 2.0);
    REQUIRE(p.beta()[0] == 1.0);
    observe(p, 0, 0);
    REQUIRE(p.alpha()[0] == 2.0);
    REQUIRE(p.beta()[0] == 2.0);
    int n = 17;
    for (int i = 0; i < n; ++i) observe(p, 2, i % 2);
    REQUIRE(p.alpha()[2] + p.beta()[2] == 2.0 + n);
}

TEST_CASE("CTS uniform prior ranks items uniformly") {
    const int L = 4, trials = 100000;
    Cts p(L, 1);
    Rng rng(23);
    std::vector<int> first(L, 0);
    for (int i = 0; i < trials; ++i) ++first[p.select(1, rng).items[0]];
    double se = std::sqrt(0.25 * 0.75 / trials);
    for (int i = 0; i < L; ++i)
        REQUIRE(std::abs(first[i] / static_cast<double>(trials) - 0.25) <= 4.0 * se);
}

TEST_CASE("CTS concentrated posterior picks the loaded item") {
    Cts p(2, 1);
    for (int i = 0; i < 999; ++i) {
        observe(p, 0, 1);
        observe(p, 1, 0);
    }
    Rng rng(29);
    int hits = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) hits += p.select(1, rng).items[0] == 0;
    REQUIRE(hits / static_cast<double>(trials) > 0.999);
}

TEST_CASE("CTS with L == K selects everything") {
    Cts p(3, 3);
    Rng rng(31);
    auto s = p.select(1, rng);
    std::sort(s.items.begin(), s.items.end());
    REQUIRE(s.items == std::vector<int>{0, 1, 2});
}

TEST_CASE("CascadeUCB1 cold start and index arithmetic") {
    CascadeUcb1 p(3, 2);
    Rng rng(1);
    // item 0: w_hat 0.5 after 6 observations; item 1: w_hat 5/6; item 2 unexplored
    for (int i = 0; i < 6; ++i) {
        observe(p, 0, i < 3);
        observe(p, 1, i < 5);
    }
    // at t = e: U(0) = 0.5 + sqrt(1.5/6) = 1.0, U(1) = 5/6 + 0.5, U(2) = inf
    auto s = p.select(3, rng);  // any t: infinite index wins
    REQUIRE(s.items[0] == 2);

    CascadeUcb1 q(2, 2);
    for (int i = 0; i < 6; ++i) {
        observe(q, 0, i < 3);
        observe(q, 1, i < 5);
    }
    // 5/6 + 0.5 > 0.5 + 0.5 so item 1 leads once everything is explored
    REQUIRE(q.select(3, rng).items == std::vector<int>{1, 0});
}

TEST_CASE("fresh UCB1 and KL-UCB return the first K items") {
    Rng rng(2);
    CascadeUcb1 a(5, 2);
    CascadeKlUcb b(5, 2);
    REQUIRE(a.select(1, rng).items == std::vector<int>{0, 1});
    REQUIRE(b.select(1, rng).items == std::vector<int>{0, 1});
}

TEST_CASE("KL-UCB index closed forms") {
    REQUIRE(kl_ucb_index(0.37, 12.0, 0.0) == 0.37);
    double budget = CascadeKlUcb::budget(100);
    REQUIRE_THAT(budget, Catch::Matchers::WithinAbs(std::log(100.0) + 3.0 * std::log(std::log(100.0)), 1e-12));
    // w = 0: KL(0, q) = -ln(1-q), so q = 1 - exp(-budget/N)
    double q = kl_ucb_index(0.0, 5.0, budget);
    REQUIRE_THAT(q, Catch::Matchers::WithinAbs(1.0 - std::exp(-budget / 5.0), 1e-9));
    REQUIRE(CascadeKlUcb::budget(1) == 0.0);
}

TEST_CASE("KL-UCB bisection lands inside the budget window") {
    Rng rng(37);
    for (int trial = 0; trial < 300; ++trial) {
        double w = rng.uniform() * 0.9;
        double n = 1.0 + std::floor(rng.uniform() * 500.0);
        double budget = 0.1 + rng.uniform() * 8.0;
        double q = kl_ucb_index(w, n, budget);
        REQUIRE(q >= w);
        if (q < 1.0 - 1e-12) {
            double used = n * bernoulli_kl(w, q);
            REQUIRE(used <= budget);
            REQUIRE(used >= budget - 1e-7);
        }
    }
}

TEST_CASE("selection is deterministic given the stream seed") {
    ProblemInstance inst(6, 2, {0.3, 0.25, 0.2, 0.15, 0.1, 0.05});
    std::vector<std::unique_ptr<Policy>> fresh;
    auto run_once = [&inst](Policy& p, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<int> trace;
        for (std::int64_t t = 1; t <= 50; ++t) {
            RankedList s = p.select(t, rng);
            Feedback f = simulate_step(inst, s, rng);
            p.update(s, f);
            for (int i : s.items) trace.push_back(i);
        }
        return trace;
    };
    for (int which = 0; which < 4; ++which) {
        auto make = [&]() -> std::unique_ptr<Policy> {
            switch (which) {
                case 0: return std::make_unique<TsCascade>(6, 2);
                case 1: return std::make_unique<Cts>(6, 2);
                case 2: return std::make_unique<CascadeUcb1>(6, 2);
                default: return std::make_unique<CascadeKlUcb>(6, 2);
            }
        };
        auto p1 = make();
        auto p2 = make();
        REQUIRE(run_once(*p1, 1234) == run_once(*p2, 1234));
    }
}

TEST_CASE("observation counts equal summed prefix lengths") {
    ProblemInstance inst(5, 3, {0.4, 0.3, 0.2, 0.1, 0.05});
    TsCascade p(5, 3);
    Rng rng(41);
    const std::int64_t horizon = 500;
    std::int64_t total_observed = 0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
        RankedList s = p.select(t, rng);
        Feedback f = simulate_step(inst, s, rng);
        total_observed += f.observed_count();
        p.update(s, f);
    }
    double count_sum = std::accumulate(p.counts().begin(), p.counts().end(), 0.0);
    REQUIRE(count_sum == static_cast<double>(total_observed));
    REQUIRE(count_sum <= 3.0 * horizon);
}

TEST_CASE("oracle policy plays the top items") {
    OraclePolicy p({0.1, 0.5, 0.2, 0.4}, 2);
    Rng rng(43);
    REQUIRE(p.select(1, rng).items == std::vector<int>{1, 3});
}
