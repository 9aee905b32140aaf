#pragma once

//
// Local maximization of a quadratic form xᵀMx over the level set
// L = {x : ‖Ax‖_p ≤ 1}. Maximizing a convex function over a convex body is
// hard in general, so this is a multi-start local search: every start is
// pushed to a local maximum on ∂L and the distinct maxima are returned.
//
// For p <= 2 each step is a majorize-maximize power step. With weights
// w_i = m_i^{p−2}, m_i = max(|a_iᵀx|, floor), the ellipsoid
// {x : xᵀAᵀWAx ≤ ρ} lies inside L and touches it near x, so one power step
// z = (AᵀWA)⁻¹Mx followed by rescaling onto ∂L does not decrease xᵀMx.
// For p > 2 a projected gradient ascent with backtracking is used. For
// p = 1 local maxima are vertices of the polytope L; the iterate is
// snapped to the vertex spanned by its d−1 smallest residual rows.
//

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "error.hpp"
#include "level_set.hpp"
#include "matcore.hpp"
#include "matrix.hpp"

namespace lplr {

struct AscentOptions {
    int max_iterations = 300;
    double relative_tolerance = 1e-13;
    double weight_floor = 1e-9; // relative to max |a_iᵀx|
    bool snap_to_vertices = true;
};

struct BoundaryPoint {
    Vector x;     // on ∂L
    double value; // xᵀMx
};

/// u / ‖Au‖_p.
inline Vector to_boundary(const LevelSet& L, std::span<const double> u)
{
    const double g = L.gauge(u);
    if (!(g > 0.0) || !std::isfinite(g))
        throw Error(Errc::RankDeficient, "direction lies in the null space of A");
    Vector x(u.begin(), u.end());
    for (auto& v : x)
        v /= g;
    return x;
}

inline double quadratic_value(const DenseMatrix& m, std::span<const double> x) { return dot(x, m * x); }

namespace detail {

inline bool solve_spd(const DenseMatrix& g, std::span<const double> rhs, Vector& out)
{
    DenseMatrix l;
    try {
        l = cholesky(g);
    } catch (const Error&) {
        return false;
    }
    const std::size_t d = rhs.size();
    Vector z(d);
    for (std::size_t i = 0; i < d; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k)
            s -= l(i, k) * z[k];
        z[i] = s / l(i, i);
    }
    out.assign(d, 0.0);
    for (std::size_t ii = d; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < d; ++k)
            s -= l(k, ii) * out[k];
        out[ii] = s / l(ii, ii);
    }
    return std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); });
}

// One majorize-maximize step for p <= 2. Returns false when no finite step exists.
inline bool mm_step(const LevelSet& L, const DenseMatrix& m, std::span<const double> x, double floor, Vector& out)
{
    const DenseMatrix& a = L.A;
    const std::size_t n = a.rows(), d = a.cols();
    const Vector y = a * x;
    double ymax = 0.0;
    for (double v : y)
        ymax = std::max(ymax, std::abs(v));
    if (!(ymax > 0.0))
        return false;
    DenseMatrix g(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double mi = std::max(std::abs(y[i]), floor * ymax);
        const double w = L.p == 2.0 ? 1.0 : std::pow(mi, L.p - 2.0);
        auto r = a.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double wr = w * r[j];
            for (std::size_t k = j; k < d; ++k)
                g(j, k) += wr * r[k];
        }
    }
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 0; k < j; ++k)
            g(j, k) = g(k, j);
    Vector z;
    if (!solve_spd(g, m * x, z) || norm2(z) == 0.0)
        return false;
    out = to_boundary(L, z);
    return true;
}

// Projected gradient step on log(xᵀMx) − 2·log‖Ax‖_p with backtracking.
inline bool gradient_step(const LevelSet& L, const DenseMatrix& m, std::span<const double> x, double value,
                          double& step, Vector& out)
{
    const Vector mx = m * x;
    const double xmx = dot(x, mx);
    const Vector g = subgradient(L, x);
    const double gauge = L.gauge(x);
    const std::size_t d = x.size();
    Vector dir(d);
    for (std::size_t i = 0; i < d; ++i)
        dir[i] = mx[i] / xmx - g[i] / gauge;
    const double dn = norm2(dir);
    const double xn = norm2(x);
    if (!(dn > 0.0))
        return false;
    for (int tries = 0; tries < 40; ++tries) {
        Vector cand(d);
        for (std::size_t i = 0; i < d; ++i)
            cand[i] = x[i] + step * xn * dir[i] / dn;
        Vector b = to_boundary(L, cand);
        if (quadratic_value(m, b) > value) {
            out = std::move(b);
            step = std::min(step * 2.0, 1.0);
            return true;
        }
        step *= 0.5;
    }
    return false;
}

// Snap to the vertex of {‖Ax‖_1 ≤ 1} whose d−1 active rows are the
// smallest residuals at x.
inline bool snap_to_vertex(const LevelSet& L, std::span<const double> x, Vector& out)
{
    const DenseMatrix& a = L.A;
    const std::size_t n = a.rows(), d = a.cols();
    if (n < d - 1 || d < 2)
        return false;
    const Vector y = a * x;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(d - 1), idx.end(),
                      [&](std::size_t i, std::size_t j) { return std::abs(y[i]) < std::abs(y[j]); });
    DenseMatrix gram(d, d);
    for (std::size_t t = 0; t + 1 < d; ++t) {
        auto r = a.row(idx[t]);
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = 0; k < d; ++k)
                gram(j, k) += r[j] * r[k];
    }
    SymEigen eig;
    try {
        eig = sym_eigen(gram);
    } catch (const Error&) {
        return false;
    }
    if (d >= 2 && eig.values[d - 2] <= 1e-12 * std::max(eig.values[0], 1e-300))
        return false; // active rows do not pin down a unique direction
    Vector v = eig.Q.col(d - 1);
    if (dot(v, x) < 0.0)
        for (auto& t : v)
            t = -t;
    out = to_boundary(L, v);
    return true;
}

} // namespace detail

/// Ascends xᵀMx along ∂L from `start` to a local maximum.
inline BoundaryPoint ascend_quadratic(const LevelSet& L, const DenseMatrix& m, std::span<const double> start,
                                      const AscentOptions& opt = {})
{
    BoundaryPoint best{to_boundary(L, start), 0.0};
    best.value = quadratic_value(m, best.x);
    double step = 0.25;
    for (int it = 0; it < opt.max_iterations; ++it) {
        Vector next;
        bool ok = L.p <= 2.0 ? detail::mm_step(L, m, best.x, opt.weight_floor, next)
                             : detail::gradient_step(L, m, best.x, best.value, step, next);
        if (!ok)
            break;
        const double v = quadratic_value(m, next);
        if (!(v > best.value * (1.0 + opt.relative_tolerance))) {
            if (v > best.value) {
                best.x = std::move(next);
                best.value = v;
            }
            break;
        }
        best.x = std::move(next);
        best.value = v;
    }
    if (L.p == 1.0 && opt.snap_to_vertices) {
        Vector v;
        if (detail::snap_to_vertex(L, best.x, v)) {
            const double val = quadratic_value(m, v);
            if (val > best.value) {
                best.x = std::move(v);
                best.value = val;
            }
        }
    }
    return best;
}

/// Same point up to sign, relative tolerance `tol`.
inline bool same_axis(std::span<const double> a, std::span<const double> b, double tol = 1e-7)
{
    double dp = 0.0, dm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dp += (a[i] - b[i]) * (a[i] - b[i]);
        dm += (a[i] + b[i]) * (a[i] + b[i]);
    }
    const double scale = std::max(norm2(a), norm2(b));
    return std::sqrt(std::min(dp, dm)) <= tol * scale;
}

/// Runs the ascent from every start and returns the distinct local maxima,
/// largest value first.
inline std::vector<BoundaryPoint> search_quadratic_max(const LevelSet& L, const DenseMatrix& m,
                                                       const std::vector<Vector>& starts,
                                                       const AscentOptions& opt = {})
{
    std::vector<BoundaryPoint> found;
    for (const auto& s : starts) {
        if (L.gauge(s) <= 0.0)
            continue;
        BoundaryPoint bp = ascend_quadratic(L, m, s, opt);
        const bool dup = std::any_of(found.begin(), found.end(),
                                     [&](const BoundaryPoint& f) { return same_axis(f.x, bp.x); });
        if (!dup)
            found.push_back(std::move(bp));
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const BoundaryPoint& a, const BoundaryPoint& b) { return a.value > b.value; });
    return found;
}

} // namespace lplr
