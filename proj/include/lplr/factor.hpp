#pragma once

//
// Rank-k approximation A_k = U·D_k·Vᵀ from a ‖·‖p-SVD (ℓp paths) or from the
// ordinary SVD (ℓ2 baseline), the error bounds that go with it, and the
// compressed factor pair (U√D′_k, √D′_kᵀVᵀ) of sizes n×k and k×d.
//

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "error.hpp"
#include "lpsvd.hpp"
#include "matcore.hpp"
#include "matrix.hpp"

namespace lplr {

enum class Method { LpDeterministic, LpRandomized, L2Svd };

inline std::string_view to_string(Method m) noexcept
{
    switch (m) {
    case Method::LpDeterministic:
        return "lowner";
    case Method::LpRandomized:
        return "randomized";
    case Method::L2Svd:
        return "svd";
    }
    return "unknown";
}

inline Method method_from_string(std::string_view s)
{
    if (s == "lowner")
        return Method::LpDeterministic;
    if (s == "randomized")
        return Method::LpRandomized;
    if (s == "svd")
        return Method::L2Svd;
    throw Error(Errc::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

struct Oriented {
    DenseMatrix a;
    bool transposed = false;
};

/// Aᵀ when A has more columns than rows, otherwise A.
inline Oriented orient(const DenseMatrix& a)
{
    if (a.empty())
        throw Error(Errc::ShapeMismatch, "empty matrix");
    if (a.rows() >= a.cols())
        return {a, false};
    return {a.transpose(), true};
}

struct RankKApprox {
    std::size_t k = 0;
    Method method = Method::LpDeterministic;
    double p = 1.0;
    DiagMatrix Dk;     // σ₁..σ_k then zeros, length d
    DenseMatrix left;  // n×k
    DenseMatrix right; // k×d
    Vector sigmas;     // σ₁..σ_d
    bool transposed = false;
    LpSvd basis;       // the factorization Dk was cut from (oriented frame)
};

struct FactorConfig {
    LpSvdConfig deterministic{};
    ConditionerConfig randomized{};
};

namespace detail {

inline void require_rank(std::size_t k, std::size_t d)
{
    if (k < 1 || k + 1 > d)
        throw Error(Errc::InvalidRank, "rank k must lie in [1, d-1], got k = " + std::to_string(k) +
                                           " with d = " + std::to_string(d));
}

// Keeps the first k entries; equal σ values keep the lower indices.
inline RankKApprox truncate(LpSvd basis, std::size_t k, Method method, bool transposed)
{
    const std::size_t n = basis.U.rows(), d = basis.D.dim();
    RankKApprox out;
    out.k = k;
    out.method = method;
    out.p = basis.p;
    out.transposed = transposed;
    out.sigmas = basis.D.entries;
    out.Dk.entries.assign(d, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        out.Dk.entries[i] = basis.D[i];
    out.left = DenseMatrix(n, k);
    out.right = DenseMatrix(k, d);
    for (std::size_t i = 0; i < k; ++i) {
        const double r = std::sqrt(basis.D[i]);
        for (std::size_t row = 0; row < n; ++row)
            out.left(row, i) = basis.U(row, i) * r;
        for (std::size_t c = 0; c < d; ++c)
            out.right(i, c) = r * basis.V(c, i);
    }
    out.basis = std::move(basis);
    return out;
}

} // namespace detail

/// ℓp rank-k approximation. Orients A first; the result remembers it.
inline RankKApprox lp_low_rank(const DenseMatrix& a, std::size_t k, double p, Method method,
                               const FactorConfig& cfg = {})
{
    require_valid_p(p);
    Oriented o = orient(a);
    detail::require_rank(k, o.a.cols());
    switch (method) {
    case Method::LpDeterministic:
        return detail::truncate(lp_svd(o.a, p, cfg.deterministic), k, method, o.transposed);
    case Method::LpRandomized:
        return detail::truncate(lp_svd_randomized(o.a, p, cfg.randomized), k, method, o.transposed);
    case Method::L2Svd:
        break;
    }
    throw Error(Errc::InvalidArgument, "lp_low_rank needs an lp method; use l2_low_rank for the SVD baseline");
}

/// Truncated SVD (the optimal rank-k approximation in Frobenius norm).
inline RankKApprox l2_low_rank(const DenseMatrix& a, std::size_t k)
{
    Oriented o = orient(a);
    detail::require_rank(k, o.a.cols());
    SvdResult s = svd(o.a);
    LpSvd basis;
    basis.U = std::move(s.U);
    basis.D = std::move(s.S);
    basis.V = std::move(s.V);
    basis.p = 2.0;
    basis.distortion = 1.0;
    return detail::truncate(std::move(basis), k, Method::L2Svd, o.transposed);
}

/// left·right in the frame of the original input.
inline DenseMatrix assemble(const RankKApprox& ak)
{
    DenseMatrix m = ak.left * ak.right;
    return ak.transposed ? m.transpose() : m;
}

struct BoundPair {
    double lower = 0.0;             // d·σ_d^p; does not hold in general, never asserted
    double upper = 0.0;             // with σ_{k+1}
    std::size_t upper_sigma_index = 0; // k+1 (1-based)
    Method method = Method::LpDeterministic;
    bool lower_is_informational = true;
    double upper_sigma_k = 0.0;     // the same bound with σ_k
    double upper_alt_exponent = 0.0; // randomized only: exponent |1/p − 1/2| instead of |1 − p/2|
};

/// Error bounds for ‖A − A_k‖_{p,p}^p.
///   deterministic: d·σ_d^p ≤ · ≤ d^{1+p/2}·σ_{k+1}^p
///   randomized:    · ≤ d^{1+p}·(d³ + d² log n)^{|1−p/2|}·σ_{k+1}^p
/// For the ℓ2 baseline the deterministic formulas are reported.
inline BoundPair error_bounds(std::span<const double> sigmas, std::size_t k, double p, std::size_t d, std::size_t n,
                              Method method)
{
    require_valid_p(p);
    if (sigmas.size() != d)
        throw Error(Errc::ShapeMismatch, "need exactly d singular values");
    detail::require_rank(k, d);
    const double dd = static_cast<double>(d);
    BoundPair b;
    b.method = method;
    b.upper_sigma_index = k + 1;
    b.lower = dd * std::pow(sigmas[d - 1], p);
    const double sk1 = std::pow(sigmas[k], p);
    const double sk = std::pow(sigmas[k - 1], p);
    double factor;
    if (method == Method::LpRandomized) {
        const double base = dd * dd * dd + dd * dd * std::log(static_cast<double>(n));
        factor = std::pow(dd, 1.0 + p) * std::pow(base, std::abs(1.0 - p / 2.0));
        b.upper_alt_exponent = std::pow(dd, 1.0 + p) * std::pow(base, std::abs(1.0 / p - 0.5)) * sk1;
    } else {
        factor = std::pow(dd, 1.0 + p / 2.0);
    }
    b.upper = factor * sk1;
    b.upper_sigma_k = factor * sk;
    return b;
}

} // namespace lplr
