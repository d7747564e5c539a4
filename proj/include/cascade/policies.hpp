#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/env.hpp"
#include "cascade/lowerbound.hpp"
#include "cascade/rng.hpp"

namespace cascade {

// Common contract for all bandit policies. select must be a pure function of
// internal state, t and the rng draws; update may consume only the observed
// prefix of the feedback.
class Policy {
public:
    virtual ~Policy() = default;
    virtual RankedList select(std::int64_t t, Rng& rng) = 0;
    virtual void update(const RankedList& S, const Feedback& f) = 0;
    virtual void reset() = 0;
    virtual std::string name() const = 0;
};

// Indices of the K largest scores, descending, ties broken by lowest index.
inline RankedList top_k_by_score(const std::vector<double>& score, int K) {
    if (K < 1 || K > static_cast<int>(score.size()))
        throw std::invalid_argument("top_k_by_score: K outside 1..L");
    std::vector<int> idx(score.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto better = [&score](int a, int b) {
        return score[a] > score[b] || (score[a] == score[b] && a < b);
    };
    std::partial_sort(idx.begin(), idx.begin() + K, idx.end(), better);
    idx.resize(K);
    return RankedList(std::move(idx));
}

// Thompson sampling with a Gaussian perturbation shared across items: one
// standard-normal draw Z_t scales every item's empirical-variance width.
class TsCascade : public Policy {
public:
    TsCascade(int L, int K) : L_(L), K_(K) { reset(); }

    RankedList select(std::int64_t t, Rng& rng) override {
        return select_with_sample(rng.normal(), t);
    }

    // Ranking by w_hat(i) + z * sigma_t(i) with
    // sigma_t(i) = max{ sqrt(nu_hat * ln(t+1) / (N+1)), ln(t+1) / (N+1) }.
    RankedList select_with_sample(double z, std::int64_t t) const {
        const double log_t1 = std::log(static_cast<double>(t) + 1.0);
        std::vector<double> theta(L_);
        for (int i = 0; i < L_; ++i) {
            double nu = w_hat_[i] * (1.0 - w_hat_[i]);
            double over = log_t1 / (count_[i] + 1.0);
            double sigma = std::max(std::sqrt(nu * over), over);
            theta[i] = w_hat_[i] + z * sigma;
        }
        return top_k_by_score(theta, K_);
    }

    void update(const RankedList& S, const Feedback& f) override {
        for (auto [item, w] : observed_prefix(S, f)) {
            double n = count_[item];
            w_hat_[item] = (n * w_hat_[item] + w) / (n + 1.0);
            w_hat_[item] = std::min(1.0, std::max(0.0, w_hat_[item]));
            count_[item] += 1.0;
        }
    }

    void reset() override {
        w_hat_.assign(L_, 0.0);
        count_.assign(L_, 0.0);
    }

    std::string name() const override { return "ts-cascade"; }

    const std::vector<double>& w_hat() const { return w_hat_; }
    const std::vector<double>& counts() const { return count_; }

private:
    int L_, K_;
    std::vector<double> w_hat_;
    std::vector<double> count_;
};

// Thompson sampling with independent Beta(alpha, beta) posteriors per item.
class Cts : public Policy {
public:
    Cts(int L, int K) : L_(L), K_(K) { reset(); }

    RankedList select(std::int64_t /*t*/, Rng& rng) override {
        std::vector<double> theta(L_);
        for (int i = 0; i < L_; ++i) theta[i] = rng.beta(alpha_[i], beta_[i]);
        return top_k_by_score(theta, K_);
    }

    void update(const RankedList& S, const Feedback& f) override {
        for (auto [item, w] : observed_prefix(S, f)) {
            alpha_[item] += w;
            beta_[item] += 1 - w;
        }
    }

    void reset() override {
        alpha_.assign(L_, 1.0);
        beta_.assign(L_, 1.0);
    }

    std::string name() const override { return "cts"; }

    const std::vector<double>& alpha() const { return alpha_; }
    const std::vector<double>& beta() const { return beta_; }

private:
    int L_, K_;
    std::vector<double> alpha_;
    std::vector<double> beta_;
};

// UCB1 index adapted to the cascade setting; unobserved items carry an
// infinite index so they are tried first.
class CascadeUcb1 : public Policy {
public:
    CascadeUcb1(int L, int K) : L_(L), K_(K) { reset(); }

    RankedList select(std::int64_t t, Rng& /*rng*/) override {
        const double log_t = std::log(static_cast<double>(t));
        std::vector<double> ucb(L_);
        for (int i = 0; i < L_; ++i) {
            ucb[i] = count_[i] == 0.0
                         ? std::numeric_limits<double>::infinity()
                         : w_hat_[i] + std::sqrt(1.5 * log_t / count_[i]);
        }
        return top_k_by_score(ucb, K_);
    }

    void update(const RankedList& S, const Feedback& f) override {
        for (auto [item, w] : observed_prefix(S, f)) {
            double n = count_[item];
            w_hat_[item] = (n * w_hat_[item] + w) / (n + 1.0);
            count_[item] += 1.0;
        }
    }

    void reset() override {
        w_hat_.assign(L_, 0.0);
        count_.assign(L_, 0.0);
    }

    std::string name() const override { return "cascade-ucb1"; }

private:
    int L_, K_;
    std::vector<double> w_hat_;
    std::vector<double> count_;
};

// Largest q in [w, 1] with n * KL(w, q) <= budget, by bisection. The lower
// bracket is returned, so the constraint always holds for the result.
inline double kl_ucb_index(double w, double n, double budget) {
    if (budget <= 0.0) return w;
    if (w >= 1.0) return 1.0;
    double lo = w, hi = 1.0;
    for (int iter = 0; iter < 100 && hi - lo > 1e-15; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (n * bernoulli_kl(w, mid) <= budget)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

// KL-UCB index with exploration budget ln t + 3 ln ln t (clamped at 0; 0 for
// t < 2 where ln ln t is undefined). Unobserved items get index 1.
class CascadeKlUcb : public Policy {
public:
    CascadeKlUcb(int L, int K) : L_(L), K_(K) { reset(); }

    static double budget(std::int64_t t) {
        if (t < 2) return 0.0;
        double lt = std::log(static_cast<double>(t));
        return std::max(0.0, lt + 3.0 * std::log(lt));
    }

    RankedList select(std::int64_t t, Rng& /*rng*/) override {
        const double b = budget(t);
        std::vector<double> q(L_);
        for (int i = 0; i < L_; ++i)
            q[i] = count_[i] == 0.0 ? 1.0 : kl_ucb_index(w_hat_[i], count_[i], b);
        return top_k_by_score(q, K_);
    }

    void update(const RankedList& S, const Feedback& f) override {
        for (auto [item, w] : observed_prefix(S, f)) {
            double n = count_[item];
            w_hat_[item] = (n * w_hat_[item] + w) / (n + 1.0);
            count_[item] += 1.0;
        }
    }

    void reset() override {
        w_hat_.assign(L_, 0.0);
        count_.assign(L_, 0.0);
    }

    std::string name() const override { return "cascade-klucb"; }

private:
    int L_, K_;
    std::vector<double> w_hat_;
    std::vector<double> count_;
};

// Clairvoyant reference: always plays the K items with the largest true
// weights. Useful as a zero-regret control in the harness.
class OraclePolicy : public Policy {
public:
    OraclePolicy(const Weights& w, int K) : list_(top_k_by_score(w, K)) {}

    RankedList select(std::int64_t, Rng&) override { return list_; }
    void update(const RankedList&, const Feedback&) override {}
    void reset() override {}
    std::string name() const override { return "oracle"; }

private:
    RankedList list_;
};

}  // namespace cascade
