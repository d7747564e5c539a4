#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cascade/env.hpp"
#include "cascade/linalg.hpp"
#include "cascade/policies.hpp"

namespace cascade {

// Item feature vectors as columns of a d x L matrix. Column norms must obey
// |x(i)| <= 1/sqrt(K), the scaling the linear regret analysis assumes.
struct FeatureMatrix {
    int d = 0;
    int L = 0;
    int K = 0;
    Matrix x;  // d x L

    FeatureMatrix() = default;
    FeatureMatrix(Matrix cols, int K_) : d(cols.rows), L(cols.cols), K(K_), x(std::move(cols)) {
        if (d < 1 || L < 1 || K < 1 || K > L)
            throw std::invalid_argument("FeatureMatrix: bad dimensions");
        const double bound = 1.0 / std::sqrt(static_cast<double>(K)) + 1e-9;
        for (int i = 0; i < L; ++i)
            if (column_norm(i) > bound)
                throw std::invalid_argument("FeatureMatrix: column norm exceeds 1/sqrt(K)");
    }

    std::vector<double> column(int i) const {
        std::vector<double> c(d);
        for (int r = 0; r < d; ++r) c[r] = x(r, i);
        return c;
    }

    double column_norm(int i) const {
        double s = 0.0;
        for (int r = 0; r < d; ++r) s += x(r, i) * x(r, i);
        return std::sqrt(s);
    }

    // x(i)^T rho for every item.
    std::vector<double> scores(const std::vector<double>& rho) const {
        std::vector<double> out(L, 0.0);
        for (int r = 0; r < d; ++r) {
            double v = rho[r];
            if (v == 0.0) continue;
            for (int i = 0; i < L; ++i) out[i] += v * x(r, i);
        }
        return out;
    }
};

// A problem instance whose click probabilities come from a latent vector:
// w(i) = x(i)^T beta.
struct LinearInstance {
    FeatureMatrix features;
    std::vector<double> beta;

    LinearInstance(FeatureMatrix f, std::vector<double> b)
        : features(std::move(f)), beta(std::move(b)) {
        if (static_cast<int>(beta.size()) != features.d)
            throw std::invalid_argument("LinearInstance: beta length != d");
        for (int i = 0; i < features.L; ++i) {
            double w = dot(features.column(i), beta);
            if (!(w >= 0.0 && w <= 1.0))
                throw std::invalid_argument("LinearInstance: induced weight outside [0,1]");
        }
    }

    ProblemInstance induced_instance() const {
        Weights w(features.L);
        for (int i = 0; i < features.L; ++i) w[i] = dot(features.column(i), beta);
        return ProblemInstance(features.L, features.K, std::move(w));
    }
};

// Ridge statistics shared by the linear policies: Gram matrix M (started at
// I_d so it stays PD), response vector b, estimate psi = M^{-1} b. M^{-1} is
// maintained by Sherman-Morrison with a periodic refactorization to arrest
// drift.
class LinearModel {
public:
    explicit LinearModel(int d) : d_(d) { reset(); }

    void reset() {
        m_ = Matrix::identity(d_);
        minv_ = Matrix::identity(d_);
        b_.assign(d_, 0.0);
        psi_.assign(d_, 0.0);
        updates_since_refactor_ = 0;
        factor_dirty_ = true;
    }

    void observe(const std::vector<double>& x, double w) {
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) m_(i, j) += x[i] * x[j];
        sherman_morrison_update(minv_, x);
        if (++updates_since_refactor_ >= kRefactorPeriod) {
            minv_ = spd_inverse(m_);
            updates_since_refactor_ = 0;
        }
        for (int i = 0; i < d_; ++i) b_[i] += w * x[i];
        psi_ = matvec(minv_, b_);
        factor_dirty_ = true;
    }

    int d() const { return d_; }
    const Matrix& gram() const { return m_; }
    const Matrix& gram_inverse() const { return minv_; }
    const std::vector<double>& psi() const { return psi_; }

    // Factor F with F F^T = M^{-1}; sampling F*xi gives covariance M^{-1}.
    const Matrix& covariance_factor() const {
        if (factor_dirty_) {
            factor_ = cholesky_lower(minv_);
            factor_dirty_ = false;
        }
        return factor_;
    }

    double mahalanobis(const std::vector<double>& x) const {
        return std::sqrt(std::max(0.0, dot(x, matvec(minv_, x))));
    }

private:
    static constexpr int kRefactorPeriod = 1024;
    int d_;
    Matrix m_, minv_;
    std::vector<double> b_, psi_;
    int updates_since_refactor_ = 0;
    mutable Matrix factor_;
    mutable bool factor_dirty_ = true;
};

// Thompson sampling on the latent vector: perturb the ridge estimate in the
// Gram metric, rho_t = psi + lambda * v_t * sqrt(K) * F * xi with
// v_t = 3 sqrt(d ln t) and xi standard normal.
class LinTsCascade : public Policy {
public:
    LinTsCascade(std::shared_ptr<const FeatureMatrix> features, double lambda)
        : features_(std::move(features)), lambda_(lambda), model_(features_->d) {}

    RankedList select(std::int64_t t, Rng& rng) override {
        std::vector<double> xi(features_->d);
        for (double& z : xi) z = rng.normal();
        return select_with_sample(xi, t);
    }

    RankedList select_with_sample(const std::vector<double>& xi, std::int64_t t) const {
        std::vector<double> rho = sample_rho(xi, t);
        return top_k_by_score(features_->scores(rho), features_->K);
    }

    std::vector<double> sample_rho(const std::vector<double>& xi, std::int64_t t) const {
        const int d = features_->d;
        const double v_t = 3.0 * std::sqrt(d * std::log(static_cast<double>(t)));
        const double gain = lambda_ * v_t * std::sqrt(static_cast<double>(features_->K));
        const Matrix& f = model_.covariance_factor();
        std::vector<double> rho = model_.psi();
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = 0; j <= i; ++j) s += f(i, j) * xi[j];
            rho[i] += gain * s;
        }
        return rho;
    }

    void update(const RankedList& S, const Feedback& f) override {
        for (auto [item, w] : observed_prefix(S, f))
            model_.observe(features_->column(item), w);
    }

    void reset() override { model_.reset(); }

    std::string name() const override { return "lints-cascade"; }

    double lambda() const { return lambda_; }
    const LinearModel& model() const { return model_; }

private:
    std::shared_ptr<const FeatureMatrix> features_;
    double lambda_;
    LinearModel model_;
};

// LinUCB baseline: deterministic optimism in the Gram metric, scores clipped
// at 1.
class CascadeLinUcb : public Policy {
public:
    CascadeLinUcb(std::shared_ptr<const FeatureMatrix> features, double sigma, double delta)
        : features_(std::move(features)), sigma_(sigma), delta_(delta), model_(features_->d) {}

    RankedList select(std::int64_t t, Rng& /*rng*/) override {
        const double c_t =
            std::sqrt(features_->d * std::log((1.0 + static_cast<double>(t)) / delta_));
        std::vector<double> score = features_->scores(model_.psi());
        for (int i = 0; i < features_->L; ++i) {
            score[i] += sigma_ * c_t * model_.mahalanobis(features_->column(i));
            score[i] = std::min(1.0, score[i]);
        }
        return top_k_by_score(score, features_->K);
    }

    void update(const RankedList& S, const Feedback& f) override {
        for (auto [item, w] : observed_prefix(S, f))
            model_.observe(features_->column(item), w);
    }

    void reset() override { model_.reset(); }

    std::string name() const override { return "cascade-linucb"; }

    const LinearModel& model() const { return model_; }

private:
    std::shared_ptr<const FeatureMatrix> features_;
    double sigma_;
    double delta_;
    LinearModel model_;
};

// Thompson sampling baseline on the latent vector with a fixed perturbation
// scale: psi_tilde ~ N(psi, sigma^2 M^{-1}).
class CascadeLinTs : public Policy {
public:
    CascadeLinTs(std::shared_ptr<const FeatureMatrix> features, double sigma)
        : features_(std::move(features)), sigma_(sigma), model_(features_->d) {}

    RankedList select(std::int64_t /*t*/, Rng& rng) override {
        std::vector<double> xi(features_->d);
        for (double& z : xi) z = rng.normal();
        return select_with_sample(xi);
    }

    RankedList select_with_sample(const std::vector<double>& xi) const {
        const Matrix& f = model_.covariance_factor();
        std::vector<double> psi = model_.psi();
        for (int i = 0; i < features_->d; ++i) {
            double s = 0.0;
            for (int j = 0; j <= i; ++j) s += f(i, j) * xi[j];
            psi[i] += sigma_ * s;
        }
        return top_k_by_score(features_->scores(psi), features_->K);
    }

    void update(const RankedList& S, const Feedback& f) override {
        for (auto [item, w] : observed_prefix(S, f))
            model_.observe(features_->column(item), w);
    }

    void reset() override { model_.reset(); }

    std::string name() const override { return "cascade-lints"; }

    const LinearModel& model() const { return model_; }

private:
    std::shared_ptr<const FeatureMatrix> features_;
    double sigma_;
    LinearModel model_;
};

struct GeneratedFeatures {
    FeatureMatrix features;
    double scale = 0.0;  // global factor applied to S V^T
};

// Learn item features from a 0/1 click history: X = S V^T from the rank-d
// truncated SVD of the training matrix, then one global rescaling so the
// largest column norm equals 1/sqrt(K).
inline GeneratedFeatures generate_features(const Matrix& a_train, int d, int K) {
    for (double e : a_train.a)
        if (e != 0.0 && e != 1.0)
            throw std::invalid_argument("generate_features: entries must be 0 or 1");
    bool any = false;
    for (double e : a_train.a) any = any || e != 0.0;
    if (!any) throw std::runtime_error("generate_features: degenerate training matrix");

    SvdResult svd = truncated_svd(a_train, d);
    const int L = a_train.cols;
    Matrix x(d, L);
    for (int r = 0; r < d; ++r)
        for (int i = 0; i < L; ++i) x(r, i) = svd.s[r] * svd.v(i, r);

    double max_norm = 0.0;
    for (int i = 0; i < L; ++i) {
        double s = 0.0;
        for (int r = 0; r < d; ++r) s += x(r, i) * x(r, i);
        max_norm = std::max(max_norm, std::sqrt(s));
    }
    double scale = 1.0 / (std::sqrt(static_cast<double>(K)) * max_norm);
    for (double& e : x.a) e *= scale;
    return GeneratedFeatures{FeatureMatrix(std::move(x), K), scale};
}

inline nlohmann::json features_to_json(const FeatureMatrix& f) {
    std::vector<std::vector<double>> cols(f.L);
    for (int i = 0; i < f.L; ++i) cols[i] = f.column(i);
    return nlohmann::json{{"d", f.d}, {"K", f.K}, {"X", cols}};
}

inline FeatureMatrix features_from_json(const nlohmann::json& j) {
    int d = j.at("d").get<int>();
    int K = j.at("K").get<int>();
    auto cols = j.at("X").get<std::vector<std::vector<double>>>();
    Matrix x(d, static_cast<int>(cols.size()));
    for (int i = 0; i < x.cols; ++i) {
        if (static_cast<int>(cols[i].size()) != d)
            throw std::invalid_argument("features_from_json: column length != d");
        for (int r = 0; r < d; ++r) x(r, i) = cols[i][r];
    }
    return FeatureMatrix(std::move(x), K);
}

inline FeatureMatrix load_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feature file: " + path);
    nlohmann::json j;
    in >> j;
    return features_from_json(j);
}

inline void save_features(const FeatureMatrix& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write feature file: " + path);
    out << features_to_json(f).dump() << "\n";
}

// Dense 0/1 training matrix, one CSV row per user.
inline Matrix load_training_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open training file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("training CSV: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("training CSV: empty file");
    Matrix a(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) a(i, j) = rows[i][j];
    return a;
}

inline void save_training_csv(const Matrix& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write training file: " + path);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) {
            if (j) out << ',';
            out << static_cast<int>(a(i, j));
        }
        out << '\n';
    }
}

}  // namespace cascade
