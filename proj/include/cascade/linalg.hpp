#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/rng.hpp"

namespace cascade {

// Dense row-major matrix of doubles. Sized for the small systems used here
// (feature dimensions up to a few hundred).
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double x : a) s += x * x;
        return std::sqrt(s);
    }
};

inline Matrix multiply(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw std::invalid_argument("multiply: shape mismatch");
    Matrix z(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            double xik = x(i, k);
            if (xik == 0.0) continue;
            for (int j = 0; j < y.cols; ++j) z(i, j) += xik * y(k, j);
        }
    return z;
}

inline std::vector<double> matvec(const Matrix& m, const std::vector<double>& v) {
    if (m.cols != static_cast<int>(v.size())) throw std::invalid_argument("matvec: shape mismatch");
    std::vector<double> out(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
inline Matrix cholesky_lower(const Matrix& m) {
    if (m.rows != m.cols) throw std::invalid_argument("cholesky_lower: matrix not square");
    const int n = m.rows;
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0)
                    throw std::runtime_error("cholesky_lower: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

// Inverse of an SPD matrix via its Cholesky factor.
inline Matrix spd_inverse(const Matrix& m) {
    const int n = m.rows;
    Matrix l = cholesky_lower(m);
    Matrix linv(n, n);  // inverse of the lower factor
    for (int j = 0; j < n; ++j) {
        linv(j, j) = 1.0 / l(j, j);
        for (int i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (int k = j; k < i; ++k) s += l(i, k) * linv(k, j);
            linv(i, j) = -s / l(i, i);
        }
    }
    Matrix inv(n, n);  // linv^T * linv
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            double s = 0.0;
            for (int k = i; k < n; ++k) s += linv(k, i) * linv(k, j);
            inv(i, j) = inv(j, i) = s;
        }
    return inv;
}

// In-place rank-1 downdate of an inverse: given inv = A^{-1}, replace it with
// (A + x x^T)^{-1} = inv - (inv x)(inv x)^T / (1 + x^T inv x).
inline void sherman_morrison_update(Matrix& inv, const std::vector<double>& x) {
    std::vector<double> ix = matvec(inv, x);
    double denom = 1.0 + dot(x, ix);
    for (int i = 0; i < inv.rows; ++i)
        for (int j = 0; j < inv.cols; ++j) inv(i, j) -= ix[i] * ix[j] / denom;
}

struct EigenSym {
    std::vector<double> values;  // descending
    Matrix vectors;              // column k pairs with values[k]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Brute force but
// dependable; used as the independent oracle for the SVD kernel.
inline EigenSym jacobi_eigen_sym(Matrix m, int max_sweeps = 100, double tol = 1e-14) {
    if (m.rows != m.cols) throw std::invalid_argument("jacobi_eigen_sym: matrix not square");
    const int n = m.rows;
    Matrix v = Matrix::identity(n);
    const double scale = std::max(m.frobenius_norm(), 1e-300);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
        if (std::sqrt(2.0 * off) <= tol * scale) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                double apq = m(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&m](int a, int b) { return m(a, a) > m(b, b); });
    EigenSym out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (int k = 0; k < n; ++k) {
        out.values[k] = m(order[k], order[k]);
        for (int i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

struct SvdResult {
    Matrix u;                  // m x d, orthonormal columns
    std::vector<double> s;     // d singular values, descending, >= 0
    Matrix v;                  // n x d, orthonormal columns
};

struct SvdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Remove the components of x along the first `count` columns of basis, twice
// for numerical hygiene. Returns the remaining norm.
inline double orthogonalize(std::vector<double>& x, const Matrix& basis, int count) {
    for (int pass = 0; pass < 2; ++pass)
        for (int k = 0; k < count; ++k) {
            double proj = 0.0;
            for (int i = 0; i < static_cast<int>(x.size()); ++i) proj += basis(i, k) * x[i];
            for (int i = 0; i < static_cast<int>(x.size()); ++i) x[i] -= proj * basis(i, k);
        }
    return norm2(x);
}

// Unit vector orthogonal to the first `count` columns of basis, found by
// orthogonalizing canonical basis vectors.
inline std::vector<double> orthonormal_complement(const Matrix& basis, int count, int dim) {
    for (int j = 0; j < dim; ++j) {
        std::vector<double> e(dim, 0.0);
        e[j] = 1.0;
        double n = orthogonalize(e, basis, count);
        if (n > 0.5) {
            for (double& x : e) x /= n;
            return e;
        }
    }
    throw SvdError("truncated_svd: cannot extend orthonormal basis");
}

}  // namespace detail

// Top-d singular triplets of a by power iteration with deflation. Each
// triplet iterates until its two-sided residual |B^T u - sigma v| reaches the
// rounding floor (which certifies |sigma - sigma_true| <= residual); a stalled
// iteration is still accepted if the residual is below rel_tol * |A|_F, and
// throws SvdError with the residual otherwise.
inline SvdResult truncated_svd(const Matrix& a, int d, double rel_tol = 1e-10,
                               int max_iter = 100000) {
    const int m = a.rows, n = a.cols;
    if (d < 1 || d > std::min(m, n))
        throw std::invalid_argument("truncated_svd: rank outside 1..min(m,n)");
    SvdResult r;
    r.u = Matrix(m, d);
    r.v = Matrix(n, d);
    r.s.assign(d, 0.0);

    Matrix b = a;  // deflated copy
    const double scale = std::max(a.frobenius_norm(), 1e-300);
    const double zero_floor = 1e-14 * scale;
    const double hard_gate = 1e-13 * scale;
    const double soft_gate = rel_tol * scale;
    Rng rng(0x5eed5eed5eedULL);  // fixed stream: results are deterministic

    for (int k = 0; k < d; ++k) {
        std::vector<double> u(m), v(n);
        for (double& x : u) x = rng.normal();
        detail::orthogonalize(u, r.u, k);
        double nu = norm2(u);
        if (nu < 1e-12) u = detail::orthonormal_complement(r.u, k, m);
        else for (double& x : u) x /= nu;

        double sigma = 0.0;
        double res_best = 1e300;
        int stall = 0;
        bool converged = false, zero = false;
        for (int iter = 0; iter < max_iter; ++iter) {
            // v <- B^T u / |.|, then u <- B v / |.|
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int i = 0; i < m; ++i) s += b(i, j) * u[i];
                v[j] = s;
            }
            double nv = norm2(v);
            if (nv <= zero_floor) { zero = true; break; }
            for (double& x : v) x /= nv;
            for (int i = 0; i < m; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) s += b(i, j) * v[j];
                u[i] = s;
            }
            sigma = norm2(u);
            if (sigma <= zero_floor) { zero = true; break; }
            for (double& x : u) x /= sigma;
            if (detail::orthogonalize(u, r.u, k) < 0.5) {
                // collapsed into the deflated space; restart from a fresh direction
                for (double& x : u) x = rng.normal();
                detail::orthogonalize(u, r.u, k);
            }
            double nu2 = norm2(u);
            for (double& x : u) x /= nu2;

            double res = 0.0;
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int i = 0; i < m; ++i) s += b(i, j) * u[i];
                res += (s - sigma * v[j]) * (s - sigma * v[j]);
            }
            res = std::sqrt(res);
            if (res <= hard_gate) {
                converged = true;
                break;
            }
            if (res < res_best * (1.0 - 1e-4)) {
                res_best = res;
                stall = 0;
            } else if (++stall >= 500) {
                if (res_best <= soft_gate) {
                    converged = true;
                    break;
                }
                throw SvdError("truncated_svd: stalled on triplet " + std::to_string(k) +
                               " (sigma " + std::to_string(sigma) + ", residual " +
                               std::to_string(res_best) + ")");
            }
        }

        if (zero || sigma <= zero_floor) {
            r.s[k] = 0.0;
            u = detail::orthonormal_complement(r.u, k, m);
            v = detail::orthonormal_complement(r.v, k, n);
        } else if (!converged) {
            throw SvdError("truncated_svd: no convergence for triplet " + std::to_string(k) +
                           " (sigma " + std::to_string(sigma) + ", residual " +
                           std::to_string(res_best) + ")");
        } else {
            r.s[k] = sigma;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) b(i, j) -= sigma * u[i] * v[j];
        }
        for (int i = 0; i < m; ++i) r.u(i, k) = u[i];
        for (int j = 0; j < n; ++j) r.v(j, k) = v[j];
    }
    return r;
}

}  // namespace cascade
