#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cascade/env.hpp"

namespace cascade {

// KL divergence between Bern(a) and Bern(b), with the 0*log(0/.) = 0
// convention. Returns +inf when b is degenerate and a != b.
inline double bernoulli_kl(double a, double b) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("bernoulli_kl: a outside [0,1]");
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("bernoulli_kl: b outside [0,1]");
    if (a == b) return 0.0;
    if (b <= 0.0 || b >= 1.0) return std::numeric_limits<double>::infinity();
    double kl = 0.0;
    if (a > 0.0) kl += a * std::log(a / b);
    if (a < 1.0) kl += (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
    return kl;
}

// The family of L+1 hard instances: instance 0 is flat at (1-eps)/K, and
// instance ell >= 1 lifts the circular block of K items starting at ell to
// (1+eps)/K. Requires 0 < (1-eps)/K < (1+eps)/K < 1/4, hence K >= 5.
struct HardInstanceFamily {
    int L = 0;
    int K = 0;
    double epsilon = 0.0;

    HardInstanceFamily(int L_, int K_, double eps) : L(L_), K(K_), epsilon(eps) {
        if (L < 1 || K < 1 || K > L)
            throw std::invalid_argument("HardInstanceFamily: need 1 <= K <= L");
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("HardInstanceFamily: epsilon outside (0,1)");
        if (!((1.0 + eps) / K < 0.25))
            throw std::invalid_argument(
                "HardInstanceFamily: requires (1+eps)/K < 1/4 (so K >= 5)");
    }

    double cold_weight() const { return (1.0 - epsilon) / K; }
    double hot_weight() const { return (1.0 + epsilon) / K; }
};

// 0-based hot block of instance ell (ell >= 1): items ell-1, ..., ell+K-2 mod L.
inline RankedList optimal_list_for(const HardInstanceFamily& fam, int ell) {
    if (ell < 0 || ell > fam.L)
        throw std::invalid_argument("optimal_list_for: ell outside 0..L");
    std::vector<int> items(fam.K);
    if (ell == 0) {
        for (int k = 0; k < fam.K; ++k) items[k] = k;  // all lists are optimal; pick 1..K
    } else {
        for (int k = 0; k < fam.K; ++k) items[k] = (ell - 1 + k) % fam.L;
    }
    return RankedList(std::move(items));
}

inline Weights weights_for(const HardInstanceFamily& fam, int ell) {
    if (ell < 0 || ell > fam.L)
        throw std::invalid_argument("weights_for: ell outside 0..L");
    Weights w(fam.L, fam.cold_weight());
    if (ell >= 1)
        for (int k = 0; k < fam.K; ++k) w[(ell - 1 + k) % fam.L] = fam.hot_weight();
    return w;
}

// Per-arm gap bound of the hard family: r(S*,l) - r(S) >= 2*Q*eps/(e^4*K)
// with Q the number of items of S outside the hot block.
inline double gap_lower_bound(const HardInstanceFamily& fam, const RankedList& S, int ell) {
    if (ell < 1 || ell > fam.L)
        throw std::invalid_argument("gap_lower_bound: ell outside 1..L");
    std::vector<bool> hot(fam.L, false);
    for (int k = 0; k < fam.K; ++k) hot[(ell - 1 + k) % fam.L] = true;
    int outside = 0;
    for (int i : S.items) {
        if (i < 0 || i >= fam.L)
            throw std::invalid_argument("gap_lower_bound: item index out of range");
        if (!hot[i]) ++outside;
    }
    return 2.0 * outside * fam.epsilon / (std::exp(4.0) * fam.K);
}

// Closed-form per-step KL budget, averaged over the instance family:
// (K/L) * [(1-eps)ln((1-eps)/(1+eps)) + (K-1+eps)ln((K-1+eps)/(K-1-eps))].
// Algebraically equal to (K^2/L) * KL((1-eps)/K, (1+eps)/K); O(eps^2) as eps -> 0.
inline double kl_budget(const HardInstanceFamily& fam) {
    const double eps = fam.epsilon;
    const double K = fam.K;
    double inner = (1.0 - eps) * std::log((1.0 - eps) / (1.0 + eps)) +
                   (K - 1.0 + eps) * std::log((K - 1.0 + eps) / (K - 1.0 - eps));
    return K / fam.L * inner;
}

struct MinimaxBound {
    double value = 0.0;
    double epsilon = 0.0;
};

// Numeric evaluation of the regret lower bound
//   max over admissible eps of (2*eps*T/e^4) * (1 - K/L - eps*sqrt(T*K/(2L))),
// clamped at 0, by grid search over eps in (0, min(1, K/4 - 1)).
inline MinimaxBound minimax_bound(int L, int K, std::int64_t T, int grid_points = 10000) {
    if (L < 1 || K < 1 || K > L || T < 1)
        throw std::invalid_argument("minimax_bound: need 1 <= K <= L and T >= 1");
    const double eps_max = std::min(1.0, K / 4.0 - 1.0);
    if (!(eps_max > 0.0))
        throw std::invalid_argument("minimax_bound: no admissible epsilon (needs K >= 5)");
    const double e4 = std::exp(4.0);
    const double root = std::sqrt(static_cast<double>(T) * K / (2.0 * L));
    MinimaxBound best;
    for (int i = 1; i <= grid_points; ++i) {
        double eps = eps_max * i / (grid_points + 1.0);
        double val = 2.0 * eps * T / e4 * (1.0 - static_cast<double>(K) / L - eps * root);
        if (val > best.value) {
            best.value = val;
            best.epsilon = eps;
        }
    }
    return best;  // value 0 with epsilon 0 in the vacuous regime
}

}  // namespace cascade
