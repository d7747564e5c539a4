#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cascade/env.hpp"
#include "cascade/linalg.hpp"
#include "cascade/policies.hpp"
#include "cascade/rng.hpp"

namespace cascade {

struct RewardDecomposition {
    double form1 = 0.0;
    double form2 = 0.0;
    double direct = 0.0;
};

// The two telescoping expansions of r(S|w) - r(S'|w') next to the direct
// difference. All three agree to rounding for arbitrary real weights.
inline RewardDecomposition reward_decomposition(const RankedList& s, const RankedList& sp,
                                                const Weights& w, const Weights& wp) {
    const int k_len = s.size();
    if (sp.size() != k_len)
        throw std::invalid_argument("reward_decomposition: lists differ in length");
    std::vector<double> ws(k_len), wps(k_len);
    for (int k = 0; k < k_len; ++k) {
        ws[k] = w.at(s.items[k]);
        wps[k] = wp.at(sp.items[k]);
    }
    // prefix[k] = prod_{j<k}(1-ws[j]); suffix[k] = prod_{j>k}(1-wps[j]) and the
    // mirrored pair for the second expansion.
    RewardDecomposition out;
    for (int k = 0; k < k_len; ++k) {
        double pre_w = 1.0, suf_wp = 1.0, pre_wp = 1.0, suf_w = 1.0;
        for (int j = 0; j < k; ++j) {
            pre_w *= 1.0 - ws[j];
            pre_wp *= 1.0 - wps[j];
        }
        for (int j = k + 1; j < k_len; ++j) {
            suf_wp *= 1.0 - wps[j];
            suf_w *= 1.0 - ws[j];
        }
        out.form1 += pre_w * (ws[k] - wps[k]) * suf_wp;
        out.form2 += pre_wp * (ws[k] - wps[k]) * suf_w;
    }
    double prod_w = 1.0, prod_wp = 1.0;
    for (int k = 0; k < k_len; ++k) {
        prod_w *= 1.0 - ws[k];
        prod_wp *= 1.0 - wps[k];
    }
    out.direct = prod_wp - prod_w;  // r(S|w) - r(S'|w')
    return out;
}

// Per-item confidence widths behind the concentration events:
// g_t(i) = sqrt(16 nu_hat ln(t+1) / (N+1)) + 24 ln(t+1) / (N+1),
// h_t(i) = sqrt(ln(t+1)) * g_t(i).
struct ConfidenceWidths {
    std::vector<double> g;
    std::vector<double> h;
};

inline ConfidenceWidths confidence_widths(const std::vector<double>& w_hat,
                                          const std::vector<double>& counts, std::int64_t t) {
    if (w_hat.size() != counts.size())
        throw std::invalid_argument("confidence_widths: length mismatch");
    if (t < 1) throw std::invalid_argument("confidence_widths: t >= 1 required");
    const double log_t1 = std::log(static_cast<double>(t) + 1.0);
    ConfidenceWidths cw;
    cw.g.resize(w_hat.size());
    cw.h.resize(w_hat.size());
    for (size_t i = 0; i < w_hat.size(); ++i) {
        double nu = w_hat[i] * (1.0 - w_hat[i]);
        double over = log_t1 / (counts[i] + 1.0);
        cw.g[i] = std::sqrt(16.0 * nu * over) + 24.0 * over;
        cw.h[i] = std::sqrt(log_t1) * cw.g[i];
    }
    return cw;
}

struct ConcentrationRow {
    std::int64_t t = 0;
    double frequency = 0.0;  // empirical Pr[ |w_hat - w| <= g for all items ]
    double floor = 0.0;      // max(0, 1 - 3L/(t+1)^3)
    bool pass = false;
};

struct ConcentrationConfig {
    int replications = 2000;
    std::vector<std::int64_t> checkpoints;
    std::uint64_t base_seed = 1;
};

// Monte-Carlo frequency of the estimator concentration event along TS-Cascade
// trajectories, next to the analytic floor it must dominate.
inline std::vector<ConcentrationRow> concentration_rate(const ProblemInstance& inst,
                                                        const ConcentrationConfig& cfg) {
    if (cfg.replications < 1000)
        throw std::invalid_argument("concentration_rate: needs >= 1000 replications");
    if (cfg.checkpoints.empty())
        throw std::invalid_argument("concentration_rate: no checkpoints");
    std::vector<std::int64_t> ts = cfg.checkpoints;
    std::sort(ts.begin(), ts.end());
    std::vector<std::int64_t> hold(ts.size(), 0);

    const std::int64_t horizon = ts.back();
    for (int rep = 0; rep < cfg.replications; ++rep) {
        Rng rng(derive_seed(cfg.base_seed, 0, static_cast<std::uint64_t>(rep)));
        TsCascade policy(inst.L, inst.K);
        size_t next_cp = 0;
        for (std::int64_t t = 1; t <= horizon; ++t) {
            if (next_cp < ts.size() && t == ts[next_cp]) {
                ConfidenceWidths cw = confidence_widths(policy.w_hat(), policy.counts(), t);
                bool ok = true;
                for (int i = 0; i < inst.L && ok; ++i)
                    ok = std::abs(policy.w_hat()[i] - inst.w[i]) <= cw.g[i];
                if (ok) ++hold[next_cp];
                ++next_cp;
            }
            RankedList s = policy.select(t, rng);
            Feedback f = simulate_step(inst, s, rng);
            policy.update(s, f);
        }
    }

    std::vector<ConcentrationRow> rows(ts.size());
    for (size_t c = 0; c < ts.size(); ++c) {
        rows[c].t = ts[c];
        rows[c].frequency = static_cast<double>(hold[c]) / cfg.replications;
        double tail = 3.0 * inst.L / std::pow(static_cast<double>(ts[c]) + 1.0, 3.0);
        rows[c].floor = std::max(0.0, 1.0 - tail);
        rows[c].pass = rows[c].frequency >= rows[c].floor;
    }
    return rows;
}

// Click-probability gaps between optimal and suboptimal items, weights sorted
// descending. delta(i, j) = w(i) - w(K+j), 0-based in both coordinates; the
// minimum gap is delta(K-1, 0).
struct GapTable {
    Matrix delta;         // K x (L-K)
    double min_gap = 0.0;  // Delta_{K,K+1}
};

inline GapTable gap_table(const Weights& w, int K) {
    const int L = static_cast<int>(w.size());
    if (K < 1 || K >= L)
        throw std::invalid_argument("gap_table: no suboptimal items (need K < L)");
    Weights sorted = w;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    GapTable gt;
    gt.delta = Matrix(K, L - K);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < L - K; ++j) gt.delta(i, j) = sorted[i] - sorted[K + j];
    gt.min_gap = sorted[K - 1] - sorted[K];
    return gt;
}

// Shape-only sqrt(KLT) ln T reference, pinned to an empirical anchor at the
// first grid point. No absolute regret constants are asserted anywhere; this
// is for curve overlays only.
inline std::vector<double> scaling_curve(int K, int L, const std::vector<std::int64_t>& t_grid,
                                         double anchor_value) {
    if (t_grid.empty()) throw std::invalid_argument("scaling_curve: empty grid");
    for (size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] < t_grid[i - 1])
            throw std::invalid_argument("scaling_curve: grid not ascending");
    auto shape = [K, L](std::int64_t t) {
        double td = static_cast<double>(t);
        return std::sqrt(static_cast<double>(K) * L * td) * std::log(td);
    };
    double first = shape(t_grid.front());
    if (first <= 0.0)
        throw std::invalid_argument("scaling_curve: first grid point must exceed 1");
    std::vector<double> out(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) out[i] = anchor_value * shape(t_grid[i]) / first;
    return out;
}

}  // namespace cascade
