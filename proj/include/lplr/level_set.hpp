#pragma once

#include <cmath>
#include <span>

#include "error.hpp"
#include "matcore.hpp"
#include "matrix.hpp"

namespace lplr {

/// The unit level set L = {x : ‖Ax‖_p ≤ 1}. Centrally symmetric and
/// convex for p >= 1; bounded when A has full column rank.
struct LevelSet {
    DenseMatrix A;
    double p = 1.0;
    double membership_tol = 1e-9;

    LevelSet() = default;
    LevelSet(DenseMatrix a, double p_, double tol = 1e-9) : A(std::move(a)), p(p_), membership_tol(tol)
    {
        require_valid_p(p);
        if (A.empty())
            throw Error(Errc::ShapeMismatch, "level set of an empty matrix");
    }

    std::size_t dim() const noexcept { return A.cols(); }

    /// ‖Ax‖_p
    double gauge(std::span<const double> x) const
    {
        if (x.size() != A.cols())
            throw Error(Errc::ShapeMismatch, "point dimension does not match the level set");
        return pnorm(A * x, p);
    }
};

inline bool member(const LevelSet& L, std::span<const double> x)
{
    return L.gauge(x) <= 1.0 + L.membership_tol;
}

/// Subgradient of x ↦ ‖Ax‖_p at x:
///   g = ‖Ax‖_p^{1−p} · Aᵀ(sign(Ax) ⊙ |Ax|^{p−1}),
/// which satisfies gᵀx = ‖Ax‖_p and gᵀy ≤ ‖Ay‖_p for every y.
inline Vector subgradient(const LevelSet& L, std::span<const double> x)
{
    const Vector y = L.A * x;
    const double nrm = pnorm(y, L.p);
    if (!(nrm > 0.0))
        throw Error(Errc::ZeroGradient, "Ax = 0: no separating hyperplane at this point");
    Vector w(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) {
            w[i] = 0.0;
        } else if (L.p == 1.0) {
            w[i] = std::copysign(1.0, y[i]);
        } else {
            w[i] = std::copysign(std::pow(std::abs(y[i]) / nrm, L.p - 1.0), y[i]);
        }
    }
    return transpose_times(L.A, w);
}

} // namespace lplr
