#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cascade/rng.hpp"

namespace cascade {

using Weights = std::vector<double>;

// Ordered K-permutation of item indices. 0-based internally; 1-based in all
// user-facing I/O.
struct RankedList {
    std::vector<int> items;

    RankedList() = default;
    explicit RankedList(std::vector<int> idx) : items(std::move(idx)) {}

    int size() const { return static_cast<int>(items.size()); }

    void validate(int num_items) const {
        std::vector<bool> seen(num_items, false);
        for (int i : items) {
            if (i < 0 || i >= num_items)
                throw std::invalid_argument("RankedList: item index out of range");
            if (seen[i])
                throw std::invalid_argument("RankedList: duplicate item");
            seen[i] = true;
        }
    }
};

struct ProblemInstance {
    int L = 0;
    int K = 0;
    Weights w;

    ProblemInstance() = default;
    ProblemInstance(int L_, int K_, Weights w_) : L(L_), K(K_), w(std::move(w_)) {
        if (L < 1 || K < 1 || K > L)
            throw std::invalid_argument("ProblemInstance: need 1 <= K <= L");
        if (static_cast<int>(w.size()) != L)
            throw std::invalid_argument("ProblemInstance: weight vector length != L");
        for (double p : w)
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("ProblemInstance: weight outside [0,1]");
    }
};

// Cascade observation: position of the first click (1-based) or none, plus
// the realized Bernoulli draws for the observed prefix only.
struct Feedback {
    std::optional<int> click_position;
    std::vector<unsigned char> realized_clicks;

    int observed_count() const { return static_cast<int>(realized_clicks.size()); }
    double reward() const { return click_position ? 1.0 : 0.0; }
};

// Expected instantaneous reward r(S|w) = 1 - prod_{i in S} (1 - w(i)).
// The survival factors are multiplied in a canonical (sorted) order so the
// value is exactly permutation invariant in floating point; this keeps
// brute-force optimality comparisons ulp-exact.
inline double expected_reward(const RankedList& S, const Weights& w) {
    const int n = static_cast<int>(w.size());
    std::vector<double> chosen;
    chosen.reserve(S.items.size());
    for (int i : S.items) {
        if (i < 0 || i >= n)
            throw std::invalid_argument("expected_reward: item index out of range");
        chosen.push_back(w[i]);
    }
    std::sort(chosen.begin(), chosen.end(), std::greater<double>());
    double survive = 1.0;
    for (double p : chosen) survive *= 1.0 - p;
    return 1.0 - survive;
}

// r(S*|w): expected reward of the K largest weights.
inline double optimal_reward(const ProblemInstance& inst) {
    Weights sorted = inst.w;
    std::nth_element(sorted.begin(), sorted.begin() + inst.K - 1, sorted.end(),
                     std::greater<double>());
    double survive = 1.0;
    std::sort(sorted.begin(), sorted.begin() + inst.K, std::greater<double>());
    for (int k = 0; k < inst.K; ++k) survive *= 1.0 - sorted[k];
    return 1.0 - survive;
}

// One round of cascade feedback: Bernoulli draws in list order, stopping at
// the first click. The unobserved suffix consumes no randomness.
inline Feedback simulate_step(const ProblemInstance& inst, const RankedList& S, Rng& rng) {
    Feedback f;
    f.realized_clicks.reserve(S.items.size());
    for (int k = 0; k < S.size(); ++k) {
        int item = S.items[k];
        if (item < 0 || item >= inst.L)
            throw std::invalid_argument("simulate_step: item index out of range");
        bool click = rng.bernoulli(inst.w[item]);
        f.realized_clicks.push_back(click ? 1 : 0);
        if (click) {
            f.click_position = k + 1;
            break;
        }
    }
    return f;
}

// The (item, W) pairs the agent observed: everything up to and including the
// click, or the whole list when nothing was clicked.
inline std::vector<std::pair<int, int>> observed_prefix(const RankedList& S, const Feedback& f) {
    if (f.observed_count() > S.size())
        throw std::invalid_argument("observed_prefix: feedback longer than list");
    if (f.click_position && *f.click_position != f.observed_count())
        throw std::invalid_argument("observed_prefix: click position inconsistent with prefix");
    std::vector<std::pair<int, int>> out;
    out.reserve(f.realized_clicks.size());
    for (int k = 0; k < f.observed_count(); ++k)
        out.emplace_back(S.items[k], static_cast<int>(f.realized_clicks[k]));
    return out;
}

// Pseudo-regret accumulator: sums r(S*|w) - r(S_t|w) per step. Realized 0/1
// rewards are tallied alongside.
class RegretAccumulator {
public:
    explicit RegretAccumulator(const ProblemInstance& inst)
        : instance_(&inst), optimal_(optimal_reward(inst)) {}

    void step(const RankedList& S, const Feedback& f) {
        double inc = optimal_ - expected_reward(S, instance_->w);
        if (inc < 0.0) inc = 0.0;  // the gap is >= 0 up to rounding
        cum_regret_ += inc;
        realized_reward_ += f.reward();
        ++t_;
    }

    std::int64_t t() const { return t_; }
    double cum_regret() const { return cum_regret_; }
    double realized_reward() const { return realized_reward_; }
    double optimal() const { return optimal_; }

private:
    const ProblemInstance* instance_;
    double optimal_ = 0.0;
    double cum_regret_ = 0.0;
    double realized_reward_ = 0.0;
    std::int64_t t_ = 0;
};

inline ProblemInstance instance_from_json(const nlohmann::json& j) {
    return ProblemInstance(j.at("L").get<int>(), j.at("K").get<int>(),
                           j.at("w").get<Weights>());
}

inline nlohmann::json instance_to_json(const ProblemInstance& inst) {
    return nlohmann::json{{"L", inst.L}, {"K", inst.K}, {"w", inst.w}};
}

inline ProblemInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file: " + path);
    nlohmann::json j;
    in >> j;
    return instance_from_json(j);
}

inline void save_instance(const ProblemInstance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write instance file: " + path);
    out << instance_to_json(inst).dump(2) << "\n";
}

}  // namespace cascade
