#pragma once

// Test helpers and independent oracles. Nothing here calls into the
// library's solvers, so comparisons against them are two-route checks.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "lplr/matrix.hpp"
#include "lplr/rng.hpp"

namespace lplr::testing {

inline DenseMatrix gaussian_matrix(std::size_t n, std::size_t d, std::uint64_t seed)
{
    CounterRng rng(seed, 77);
    DenseMatrix a(n, d);
    for (auto& v : a.data())
        v = rng.gaussian();
    return a;
}

inline Vector gaussian_vector(std::size_t d, CounterRng& rng)
{
    Vector x(d);
    for (auto& v : x)
        v = rng.gaussian();
    return x;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

// Plain Gauss-Jordan with partial pivoting.
inline std::vector<std::vector<double>> gj_inverse(std::vector<std::vector<double>> m)
{
    const std::size_t n = m.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        inv[i][i] = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c]))
                piv = r;
        std::swap(m[c], m[piv]);
        std::swap(inv[c], inv[piv]);
        const double s = m[c][c];
        for (std::size_t j = 0; j < n; ++j) {
            m[c][j] /= s;
            inv[c][j] /= s;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c)
                continue;
            const double f = m[r][c];
            for (std::size_t j = 0; j < n; ++j) {
                m[r][j] -= f * m[c][j];
                inv[r][j] -= f * inv[c][j];
            }
        }
    }
    return inv;
}

inline double gj_log_det(std::vector<std::vector<double>> m)
{
    const std::size_t n = m.size();
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c]))
                piv = r;
        std::swap(m[c], m[piv]);
        s += std::log(std::abs(m[c][c]));
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m[r][c] / m[c][c];
            for (std::size_t j = c; j < n; ++j)
                m[r][j] -= f * m[c][j];
        }
    }
    return s;
}

/// Minimum-volume enclosing ellipsoid {x : (x−c)ᵀQ(x−c) ≤ 1} of a point set,
/// Khachiyan's algorithm on the lifted points (p, 1).
struct KhachiyanResult {
    std::vector<std::vector<double>> Q; // d×d
    std::vector<double> c;
};

inline KhachiyanResult khachiyan_mvee(const std::vector<Vector>& pts, double tol = 1e-9, int max_iter = 200000)
{
    const std::size_t m = pts.size(), d = pts[0].size(), D = d + 1;
    std::vector<double> u(m, 1.0 / static_cast<double>(m));
    for (int it = 0; it < max_iter; ++it) {
        std::vector<std::vector<double>> x(D, std::vector<double>(D, 0.0));
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t a = 0; a < D; ++a)
                for (std::size_t b = 0; b < D; ++b)
                    x[a][b] += u[j] * (a < d ? pts[j][a] : 1.0) * (b < d ? pts[j][b] : 1.0);
        const auto xi = gj_inverse(x);
        std::size_t jmax = 0;
        double mmax = -1.0;
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < D; ++a)
                for (std::size_t b = 0; b < D; ++b)
                    s += (a < d ? pts[j][a] : 1.0) * xi[a][b] * (b < d ? pts[j][b] : 1.0);
            if (s > mmax) {
                mmax = s;
                jmax = j;
            }
        }
        const double step = (mmax - static_cast<double>(D)) / (static_cast<double>(D) * (mmax - 1.0));
        if (step < tol)
            break;
        for (auto& v : u)
            v *= 1.0 - step;
        u[jmax] += step;
    }
    KhachiyanResult r;
    r.c.assign(d, 0.0);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t a = 0; a < d; ++a)
            r.c[a] += u[j] * pts[j][a];
    std::vector<std::vector<double>> s(d, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                s[a][b] += u[j] * (pts[j][a] - r.c[a]) * (pts[j][b] - r.c[b]);
    r.Q = gj_inverse(s);
    for (auto& row : r.Q)
        for (auto& v : row)
            v /= static_cast<double>(d);
    return r;
}

/// Candidate vertices of {x : ‖Ax‖₁ ≤ 1} for d = 3: every vertex has two
/// active rows, so it is ± the cross product of two rows, rescaled.
inline std::vector<Vector> l1_ball_vertices_3d(const DenseMatrix& a)
{
    std::vector<Vector> out;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.rows(); ++j) {
            const auto r = a.row(i), s = a.row(j);
            Vector x{r[1] * s[2] - r[2] * s[1], r[2] * s[0] - r[0] * s[2], r[0] * s[1] - r[1] * s[0]};
            double g = 0.0;
            for (std::size_t t = 0; t < a.rows(); ++t) {
                const auto q = a.row(t);
                g += std::abs(q[0] * x[0] + q[1] * x[1] + q[2] * x[2]);
            }
            if (g < 1e-12)
                continue;
            for (auto& v : x)
                v /= g;
            out.push_back(x);
            out.push_back({-x[0], -x[1], -x[2]});
        }
    return out;
}

/// Roots of the monic cubic x³ + b x² + c x + e with three real roots,
/// by the trigonometric formula; returned in decreasing order.
inline std::vector<double> real_cubic_roots(double b, double c, double e)
{
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + e;
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    std::vector<double> roots;
    for (int k = 0; k < 3; ++k)
        roots.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) - b / 3.0);
    std::sort(roots.rbegin(), roots.rend());
    return roots;
}

} // namespace lplr::testing
