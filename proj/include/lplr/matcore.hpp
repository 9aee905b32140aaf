#pragma once

//
// Dense linear-algebra substrate: entrywise/vector p-norms, one-sided
// Jacobi SVD, cyclic Jacobi symmetric eigensolver, Cholesky, Householder
// QR and SVD-based inversion. Everything is double precision.
//

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"

namespace lplr {

inline void require_valid_p(double p)
{
    if (!(p >= 1.0))
        throw Error(Errc::InvalidP, "p must be >= 1");
}

/// ‖x‖_p for p >= 1 (p = +inf gives the max norm).
inline double pnorm(std::span<const double> x, double p)
{
    require_valid_p(p);
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : x)
            m = std::max(m, std::abs(v));
        return m;
    }
    if (p == 1.0) {
        double s = 0.0;
        for (double v : x)
            s += std::abs(v);
        return s;
    }
    if (p == 2.0) {
        const double r = norm2(x);
        if (std::isfinite(r) && r > 1e-150)
            return r;
    }
    // scale by the max entry so |v|^p cannot overflow for large p
    double m = 0.0;
    for (double v : x)
        m = std::max(m, std::abs(v));
    if (m == 0.0)
        return 0.0;
    double s = 0.0;
    for (double v : x)
        s += std::pow(std::abs(v) / m, p);
    return m * std::pow(s, 1.0 / p);
}

/// ‖A‖_{p,p}^p, the sum over all entries of |a_ij|^p.
inline double entrywise_pnorm_pow(const DenseMatrix& a, double p)
{
    require_valid_p(p);
    if (a.empty())
        throw Error(Errc::ShapeMismatch, "entrywise norm of an empty matrix");
    if (std::isinf(p))
        throw Error(Errc::InvalidP, "entrywise p-th power needs finite p");
    double s = 0.0;
    if (p == 1.0) {
        for (double v : a.data())
            s += std::abs(v);
    } else if (p == 2.0) {
        for (double v : a.data())
            s += v * v;
    } else {
        for (double v : a.data())
            s += std::pow(std::abs(v), p);
    }
    return s;
}

struct SvdResult {
    DenseMatrix U; // rows x cols, orthonormal columns
    DiagMatrix S;  // cols entries, non-increasing
    DenseMatrix V; // cols x cols, orthogonal
};

struct SvdOptions {
    int max_sweeps = 100;
    double tolerance = 1e-12;
};

namespace detail {

// Completes the columns of U flagged in `missing` to an orthonormal set,
// using standard basis vectors as Gram-Schmidt candidates.
inline void complete_orthonormal_columns(DenseMatrix& u, const std::vector<bool>& missing)
{
    const std::size_t m = u.rows();
    const std::size_t n = u.cols();
    std::size_t candidate = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!missing[j])
            continue;
        for (; candidate < m; ++candidate) {
            Vector v(m, 0.0);
            v[candidate] = 1.0;
            // two passes of modified Gram-Schmidt for stability
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == j || (missing[k] && k > j))
                        continue;
                    double proj = 0.0;
                    for (std::size_t i = 0; i < m; ++i)
                        proj += u(i, k) * v[i];
                    for (std::size_t i = 0; i < m; ++i)
                        v[i] -= proj * u(i, k);
                }
            }
            const double nv = norm2(v);
            if (nv > 1e-6) {
                for (std::size_t i = 0; i < m; ++i)
                    u(i, j) = v[i] / nv;
                ++candidate;
                break;
            }
        }
    }
}

} // namespace detail

/// Thin SVD A = U·S·Vᵀ by one-sided (Hestenes) Jacobi. Requires rows >= cols.
inline SvdResult svd(const DenseMatrix& a, const SvdOptions& opt = {})
{
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (a.empty())
        throw Error(Errc::ShapeMismatch, "svd of an empty matrix");
    if (m < n)
        throw Error(Errc::ShapeMismatch, "svd requires rows >= cols; orient the matrix first");
    if (!a.all_finite())
        throw Error(Errc::SvdFailure, "matrix has non-finite entries");

    // Work on columns stored contiguously: W row j = column j of A.
    DenseMatrix w = a.transpose();
    DenseMatrix v = DenseMatrix::identity(n);

    bool converged = (n == 1);
    for (int sweep = 0; sweep < opt.max_sweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                auto wi = w.row(i);
                auto wj = w.row(j);
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    alpha += wi[k] * wi[k];
                    beta += wj[k] * wj[k];
                    gamma += wi[k] * wj[k];
                }
                if (gamma == 0.0 || std::abs(gamma) <= opt.tolerance * std::sqrt(alpha * beta))
                    continue;
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < m; ++k) {
                    const double x = wi[k];
                    const double y = wj[k];
                    wi[k] = c * x - s * y;
                    wj[k] = s * x + c * y;
                }
                auto vi = v.row(i);
                auto vj = v.row(j);
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = vi[k];
                    const double y = vj[k];
                    vi[k] = c * x - s * y;
                    vj[k] = s * x + c * y;
                }
            }
        }
    }
    if (!converged)
        throw Error(Errc::SvdFailure, "one-sided Jacobi did not converge within the sweep cap");

    // v rows hold the right singular vectors (Vᵀ in row form).
    Vector sigma(n);
    for (std::size_t j = 0; j < n; ++j)
        sigma[j] = norm2(w.row(j));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    const double smax = sigma[order[0]];
    SvdResult r{DenseMatrix(m, n), DiagMatrix{Vector(n)}, DenseMatrix(n, n)};
    std::vector<bool> missing(n, false);
    for (std::size_t jj = 0; jj < n; ++jj) {
        const std::size_t j = order[jj];
        r.S.entries[jj] = sigma[j];
        for (std::size_t k = 0; k < n; ++k)
            r.V(k, jj) = v(j, k);
        if (sigma[j] > std::numeric_limits<double>::min() && sigma[j] > smax * 1e-300) {
            for (std::size_t k = 0; k < m; ++k)
                r.U(k, jj) = w(j, k) / sigma[j];
        } else {
            missing[jj] = true;
        }
    }
    if (std::find(missing.begin(), missing.end(), true) != missing.end())
        detail::complete_orthonormal_columns(r.U, missing);
    return r;
}

/// Singular values only.
inline Vector singular_values(const DenseMatrix& a)
{
    return a.rows() >= a.cols() ? svd(a).S.entries : svd(a.transpose()).S.entries;
}

struct SymEigen {
    Vector values;  // non-increasing
    DenseMatrix Q;  // columns are eigenvectors
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (symmetrized first).
inline SymEigen sym_eigen(const DenseMatrix& s, int max_sweeps = 100, double tol = 1e-14)
{
    if (!s.is_square() || s.empty())
        throw Error(Errc::ShapeMismatch, "sym_eigen needs a square matrix");
    if (!s.all_finite())
        throw Error(Errc::SvdFailure, "matrix has non-finite entries");
    const std::size_t n = s.rows();
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a(i, j) = 0.5 * (s(i, j) + s(j, i));
    DenseMatrix q = DenseMatrix::identity(n);

    auto off_norm = [&] {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                off += a(i, j) * a(i, j);
        return std::sqrt(off);
    };
    const double scale = std::max(frobenius_norm(a), std::numeric_limits<double>::min());

    bool converged = off_norm() <= tol * scale;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0)
                    continue;
                const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akr = a(k, r);
                    a(k, p) = c * akp - sn * akr;
                    a(k, r) = sn * akp + c * akr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double ark = a(r, k);
                    a(p, k) = c * apk - sn * ark;
                    a(r, k) = sn * apk + c * ark;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p);
                    const double qkr = q(k, r);
                    q(k, p) = c * qkp - sn * qkr;
                    q(k, r) = sn * qkp + c * qkr;
                }
            }
        }
        converged = off_norm() <= tol * scale;
    }
    if (!converged)
        throw Error(Errc::SvdFailure, "Jacobi eigensolver did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    SymEigen e{Vector(n), DenseMatrix(n, n)};
    for (std::size_t jj = 0; jj < n; ++jj) {
        e.values[jj] = a(order[jj], order[jj]);
        for (std::size_t k = 0; k < n; ++k)
            e.Q(k, jj) = q(k, order[jj]);
    }
    return e;
}

/// Lower-triangular G with G·Gᵀ = F. F is symmetrized as (F+Fᵀ)/2 first.
inline DenseMatrix cholesky(const DenseMatrix& f)
{
    if (!f.is_square() || f.empty())
        throw Error(Errc::ShapeMismatch, "cholesky needs a square matrix");
    const std::size_t n = f.rows();
    DenseMatrix g(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = f(j, j);
        for (std::size_t k = 0; k < j; ++k)
            diag -= g(j, k) * g(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag))
            throw Error(Errc::NotPositiveDefinite, "non-positive pivot in Cholesky factorization");
        const double gjj = std::sqrt(diag);
        g(j, j) = gjj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = 0.5 * (f(i, j) + f(j, i));
            for (std::size_t k = 0; k < j; ++k)
                s -= g(i, k) * g(j, k);
            g(i, j) = s / gjj;
        }
    }
    return g;
}

struct InvertOptions {
    double condition_cap = 1e12;
};

/// Inverse of a square matrix via its SVD. Singular or over-cap
/// conditioning raises SingularMatrix.
inline DenseMatrix invert(const DenseMatrix& m, const InvertOptions& opt = {})
{
    if (!m.is_square() || m.empty())
        throw Error(Errc::ShapeMismatch, "invert needs a square matrix");
    const std::size_t n = m.rows();
    SvdResult s;
    try {
        s = svd(m);
    } catch (const Error& e) {
        throw Error(Errc::SingularMatrix, e.what());
    }
    const double smax = s.S[0];
    const double smin = s.S[n - 1];
    if (!(smin > 0.0) || smax / smin > opt.condition_cap)
        throw Error(Errc::SingularMatrix, "matrix is singular or exceeds the condition-number cap");
    // M⁻¹ = V·S⁻¹·Uᵀ
    DenseMatrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                acc += s.V(i, k) * s.U(j, k) / s.S[k];
            inv(i, j) = acc;
        }
    }
    return inv;
}

struct QrResult {
    DenseMatrix Q; // rows x cols, orthonormal columns
    DenseMatrix R; // cols x cols, upper triangular, non-negative diagonal
};

/// Thin Householder QR of a tall matrix.
inline QrResult qr(const DenseMatrix& a)
{
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (a.empty() || m < n)
        throw Error(Errc::ShapeMismatch, "qr requires rows >= cols >= 1");
    const double anorm = frobenius_norm(a);

    DenseMatrix r = a;
    std::vector<Vector> reflectors;
    reflectors.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Vector v(m - k);
        for (std::size_t i = k; i < m; ++i)
            v[i - k] = r(i, k);
        const double alpha = norm2(v);
        if (alpha == 0.0) {
            reflectors.emplace_back();
            continue;
        }
        v[0] += std::copysign(alpha, v[0]);
        const double vnorm = norm2(v);
        for (auto& x : v)
            x /= vnorm;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i)
                s += v[i - k] * r(i, j);
            for (std::size_t i = k; i < m; ++i)
                r(i, j) -= 2.0 * s * v[i - k];
        }
        reflectors.push_back(std::move(v));
    }

    QrResult out{DenseMatrix(m, n), DenseMatrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            out.R(i, j) = r(i, j);
    for (std::size_t j = 0; j < n; ++j)
        out.Q(j, j) = 1.0;
    for (std::size_t kk = n; kk-- > 0;) {
        const Vector& v = reflectors[kk];
        if (v.empty())
            continue;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = kk; i < m; ++i)
                s += v[i - kk] * out.Q(i, j);
            for (std::size_t i = kk; i < m; ++i)
                out.Q(i, j) -= 2.0 * s * v[i - kk];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(out.R(i, i)) <= 1e-12 * anorm)
            throw Error(Errc::RankDeficient, "qr: matrix is numerically rank deficient");
        if (out.R(i, i) < 0.0) {
            for (std::size_t j = i; j < n; ++j)
                out.R(i, j) = -out.R(i, j);
            for (std::size_t k = 0; k < m; ++k)
                out.Q(k, i) = -out.Q(k, i);
        }
    }
    return out;
}

} // namespace lplr
