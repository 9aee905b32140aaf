#pragma once

//
// Ellipsoids E = {x : (x−c)ᵀF⁻¹(x−c) ≤ 1} and the ellipsoid-method
// updates used to shrink them around a convex body.
//

#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"
#include "matcore.hpp"
#include "matrix.hpp"

namespace lplr {

struct Ellipsoid {
    Vector center;
    DenseMatrix shape; // F, symmetric positive definite

    std::size_t dim() const noexcept { return center.size(); }

    static Ellipsoid ball(std::size_t d, double radius)
    {
        return {Vector(d, 0.0), DenseMatrix::identity(d) * (radius * radius)};
    }
};

/// Evaluates (x−c)ᵀF⁻¹(x−c) through a cached Cholesky factor of F.
class EllipsoidMetric {
public:
    explicit EllipsoidMetric(const Ellipsoid& e) : center_(e.center), chol_(cholesky(e.shape)) {}

    double operator()(std::span<const double> x) const
    {
        const std::size_t d = center_.size();
        if (x.size() != d)
            throw Error(Errc::ShapeMismatch, "point dimension does not match the ellipsoid");
        // forward substitution G z = x − c, value = ‖z‖²
        Vector z(d);
        for (std::size_t i = 0; i < d; ++i) {
            double s = x[i] - center_[i];
            for (std::size_t k = 0; k < i; ++k)
                s -= chol_(i, k) * z[k];
            z[i] = s / chol_(i, i);
        }
        return dot(z, z);
    }

    double log_det() const noexcept
    {
        double s = 0.0;
        for (std::size_t i = 0; i < chol_.rows(); ++i)
            s += 2.0 * std::log(chol_(i, i));
        return s;
    }

private:
    Vector center_;
    DenseMatrix chol_;
};

inline double quadratic_form(const Ellipsoid& e, std::span<const double> x) { return EllipsoidMetric(e)(x); }

/// log det(F); throws NotPositiveDefinite if F is not PD.
inline double log_det(const Ellipsoid& e) { return EllipsoidMetric(e).log_det(); }

namespace detail {

struct CutFrame {
    Vector b;     // F·H / sqrt(HᵀFH)
    double scale; // sqrt(HᵀFH)
};

inline CutFrame cut_frame(const Ellipsoid& e, std::span<const double> h)
{
    const std::size_t d = e.dim();
    if (h.size() != d || e.shape.rows() != d || e.shape.cols() != d)
        throw Error(Errc::ShapeMismatch, "cut direction does not match the ellipsoid dimension");
    Vector fh = e.shape * h;
    const double hfh = dot(h, fh);
    if (!(hfh > 0.0) || !std::isfinite(hfh))
        throw Error(Errc::NotPositiveDefinite, "HᵀFH <= 0: ellipsoid shape is not positive definite");
    const double s = std::sqrt(hfh);
    for (auto& v : fh)
        v /= s;
    return {std::move(fh), s};
}

// F' = factor·(F − coef·bbᵀ), symmetrized.
inline DenseMatrix rank_one_update(const DenseMatrix& f, const Vector& b, double coef, double factor)
{
    const std::size_t d = b.size();
    DenseMatrix out(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out(i, j) = factor * (0.5 * (f(i, j) + f(j, i)) - coef * b[i] * b[j]);
    return out;
}

inline void require_dim_at_least_two(std::size_t d)
{
    if (d < 2)
        throw Error(Errc::DimensionTooSmall, "ellipsoid updates need dimension >= 2");
}

} // namespace detail

/// Central cut: keeps E ∩ {x : Hᵀ(x−c) ≤ 0}.
inline Ellipsoid central_cut(const Ellipsoid& e, std::span<const double> h)
{
    const std::size_t d = e.dim();
    detail::require_dim_at_least_two(d);
    const auto [b, s] = detail::cut_frame(e, h);
    const double dd = static_cast<double>(d);
    Ellipsoid out;
    out.center = e.center;
    for (std::size_t i = 0; i < d; ++i)
        out.center[i] -= b[i] / (dd + 1.0);
    out.shape = detail::rank_one_update(e.shape, b, 2.0 / (dd + 1.0), dd * dd / (dd * dd - 1.0));
    return out;
}

/// Shallow cut with the fixed constants
///   z = 1/(d+1)², σ = d³(d+2)/((d+1)³(d−1)), ζ = 1 + 1/(2d²(d+1)²), τ = 2/(d(d+1)),
///   F' = ζσ(F − τbbᵀ), c' = c − zb.
/// Keeps E ∩ {x : Hᵀ(x−c) ≤ √(HᵀFH)/(d+1)} (slightly inflated by ζ).
inline Ellipsoid shallow_cut(const Ellipsoid& e, std::span<const double> h)
{
    const std::size_t d = e.dim();
    detail::require_dim_at_least_two(d);
    const auto [b, s] = detail::cut_frame(e, h);
    const double dd = static_cast<double>(d);
    const double z = 1.0 / ((dd + 1.0) * (dd + 1.0));
    const double sigma = dd * dd * dd * (dd + 2.0) / ((dd + 1.0) * (dd + 1.0) * (dd + 1.0) * (dd - 1.0));
    const double zeta = 1.0 + 1.0 / (2.0 * dd * dd * (dd + 1.0) * (dd + 1.0));
    const double tau = 2.0 / (dd * (dd + 1.0));
    Ellipsoid out;
    out.center = e.center;
    for (std::size_t i = 0; i < d; ++i)
        out.center[i] -= z * b[i];
    out.shape = detail::rank_one_update(e.shape, b, tau, zeta * sigma);
    return out;
}

/// General-depth cut keeping E ∩ {x : Hᵀ(x−c) ≤ −α·√(HᵀFH)} for α ∈ (−1/d, 1).
/// α = 0 is the central cut; α < 0 cuts shallower than the center.
inline Ellipsoid depth_cut(const Ellipsoid& e, std::span<const double> h, double alpha)
{
    const std::size_t d = e.dim();
    detail::require_dim_at_least_two(d);
    const double dd = static_cast<double>(d);
    if (!(alpha > -1.0 / dd) || !(alpha < 1.0))
        throw Error(Errc::InvalidArgument, "cut depth outside (-1/d, 1)");
    const auto [b, s] = detail::cut_frame(e, h);
    const double step = (1.0 + dd * alpha) / (dd + 1.0);
    const double coef = 2.0 * (1.0 + dd * alpha) / ((dd + 1.0) * (1.0 + alpha));
    const double factor = dd * dd / (dd * dd - 1.0) * (1.0 - alpha * alpha);
    Ellipsoid out;
    out.center = e.center;
    for (std::size_t i = 0; i < d; ++i)
        out.center[i] -= step * b[i];
    out.shape = detail::rank_one_update(e.shape, b, coef, factor);
    return out;
}

/// Symmetric slab cut keeping E ∩ {x : |Hᵀ(x−c)| ≤ β·√(HᵀFH)} for β ∈ (0, 1/√d).
/// The center does not move.
inline Ellipsoid slab_cut(const Ellipsoid& e, std::span<const double> h, double beta)
{
    const std::size_t d = e.dim();
    detail::require_dim_at_least_two(d);
    const double dd = static_cast<double>(d);
    if (!(beta > 0.0) || !(beta * beta * dd < 1.0))
        throw Error(Errc::InvalidArgument, "slab half-width outside (0, 1/sqrt(d))");
    const auto [b, s] = detail::cut_frame(e, h);
    const double k = dd * (1.0 - beta * beta) / (dd - 1.0);
    Ellipsoid out;
    out.center = e.center;
    out.shape = detail::rank_one_update(e.shape, b, 1.0 - dd * beta * beta / k, k);
    return out;
}

/// The 2d points c ± factor·√λ_i·q_i where F = QΛQᵀ, ordered
/// (+q_1, −q_1, +q_2, −q_2, ...) with eigenvalues non-increasing.
inline std::vector<Vector> contracted_vertices(const Ellipsoid& e, double factor)
{
    if (!(factor > 0.0) || !(factor <= 1.0))
        throw Error(Errc::InvalidArgument, "contraction factor must lie in (0, 1]");
    const std::size_t d = e.dim();
    const SymEigen eig = sym_eigen(e.shape);
    std::vector<Vector> out;
    out.reserve(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!(eig.values[i] > 0.0))
            throw Error(Errc::NotPositiveDefinite, "ellipsoid shape has a non-positive eigenvalue");
        const double len = factor * std::sqrt(eig.values[i]);
        Vector plus = e.center, minus = e.center;
        for (std::size_t k = 0; k < d; ++k) {
            plus[k] += len * eig.Q(k, i);
            minus[k] -= len * eig.Q(k, i);
        }
        out.push_back(std::move(plus));
        out.push_back(std::move(minus));
    }
    return out;
}

} // namespace lplr
