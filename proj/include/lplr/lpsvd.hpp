#pragma once

//
// ‖·‖p-SVD: A = U·D·Vᵀ with ‖DVᵀx‖₂ ≤ ‖Ax‖_p ≤ κ·‖DVᵀx‖₂.
//
// The deterministic path takes (D, V) from the Löwner ellipsoid of
// {x : ‖Ax‖_p ≤ 1}, giving κ = √d up to solver slack. The randomized path
// conditions A with a sketch, R = qr(S·A).R, rescales R so the lower
// inequality holds on the sampled points, and reads (D, V) off svd(R).
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "boundary_search.hpp"
#include "error.hpp"
#include "level_set.hpp"
#include "lowner.hpp"
#include "matcore.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace lplr {

struct LpSvd {
    DenseMatrix U; // n×d
    DiagMatrix D;  // σ₁ ≥ … ≥ σ_d > 0
    DenseMatrix V; // d×d orthogonal
    double p = 1.0;
    double distortion = 0.0; // κ in ‖DVᵀx‖₂ ≤ ‖Ax‖_p ≤ κ‖DVᵀx‖₂
    std::size_t iterations_central = 0;
    std::size_t iterations_shallow = 0;
    int refine_rounds = 0;
};

struct LpSvdConfig {
    LownerConfig lowner{};
    double slack = 0.1;
};

namespace detail {

inline void require_tall_full_rank_shape(const DenseMatrix& a)
{
    if (a.empty())
        throw Error(Errc::ShapeMismatch, "empty matrix");
    if (a.rows() < a.cols())
        throw Error(Errc::ShapeMismatch, "expected rows >= cols; orient the matrix first");
    if (a.cols() < 2)
        throw Error(Errc::DimensionTooSmall, "need at least two columns");
}

// U = A·(D·Vᵀ)⁻¹
inline DenseMatrix left_factor(const DenseMatrix& a, const DiagMatrix& d, const DenseMatrix& v)
{
    const DenseMatrix dvt = d.dense() * v.transpose();
    return a * invert(dvt);
}

} // namespace detail

/// Deterministic ‖·‖p-SVD through the Löwner ellipsoid.
inline LpSvd lp_svd(const DenseMatrix& a, double p, const LpSvdConfig& cfg = {})
{
    require_valid_p(p);
    detail::require_tall_full_rank_shape(a);
    LownerResult lw = lowner(a, p, cfg.lowner);
    LpSvd out;
    out.U = detail::left_factor(a, lw.D, lw.V);
    out.D = std::move(lw.D);
    out.V = std::move(lw.V);
    out.p = p;
    out.distortion = std::sqrt(static_cast<double>(a.cols())) * (1.0 + cfg.slack);
    out.iterations_central = lw.iterations_central;
    out.iterations_shallow = lw.iterations_shallow;
    out.refine_rounds = lw.refine_rounds;
    return out;
}

/// Empirical range of ‖Ax‖_p / ‖DVᵀx‖₂.
struct SandwichRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Samples Gaussian directions plus the 2d axis directions ±v_i of the
/// ellipsoid {x : ‖DVᵀx‖₂ ≤ 1} (the contracted vertices up to scale; the
/// ratio is scale invariant).
inline SandwichRange sandwich_check(const DenseMatrix& a, double p, const DiagMatrix& d, const DenseMatrix& v,
                                    std::size_t num_samples, std::uint64_t seed = 0x5a4d)
{
    require_valid_p(p);
    const std::size_t dim = a.cols();
    if (d.dim() != dim || v.rows() != dim || v.cols() != dim)
        throw Error(Errc::ShapeMismatch, "D, V do not match the columns of A");
    const DenseMatrix dvt = d.dense() * v.transpose();
    SandwichRange r{std::numeric_limits<double>::infinity(), 0.0};
    auto visit = [&](std::span<const double> x) {
        const double den = norm2(dvt * x);
        if (!(den > 0.0))
            return;
        const double q = pnorm(a * x, p) / den;
        r.lo = std::min(r.lo, q);
        r.hi = std::max(r.hi, q);
    };
    CounterRng rng(seed, 0x53414e44ULL);
    Vector x(dim);
    for (std::size_t s = 0; s < num_samples; ++s) {
        for (auto& t : x)
            t = rng.gaussian();
        visit(x);
    }
    for (std::size_t i = 0; i < dim; ++i) {
        Vector c = v.col(i);
        visit(c);
        for (auto& t : c)
            t = -t;
        visit(c);
    }
    return r;
}

enum class SketchKind {
    Auto,         // chosen from p
    Identity,     // S = I (test mode)
    Gaussian,     // dense N(0,1), m = 4d
    SparseStable, // one nonzero p-stable entry per column of S, m = min(n, 8d²); Cauchy at p = 1
    RowSampling,  // uniform rows without replacement, m = min(n, ⌈8d² log n⌉)
};

struct ConditionerConfig {
    SketchKind sketch = SketchKind::Auto;
    std::size_t sketch_rows = 0; // 0 means the per-kind default
    std::size_t samples = 1000;
    int max_retries = 3;
    bool oracle_points = true; // also rescale over local minimizers of ‖Ax‖_p/‖Rx‖₂
    std::uint64_t seed = 1;
};

struct ConditionerResult {
    DenseMatrix R; // d×d, ‖Rx‖₂ ≤ ‖Ax‖_p on every sample
    DenseMatrix U; // A·R⁻¹
    double kappa_hat = 0.0; // max/min of ‖Ax‖_p/‖Rx‖₂ over the samples
    double rescale = 1.0;   // factor applied to qr(SA).R
    std::size_t sketch_rows = 0;
    int attempts = 0;
    SketchKind sketch = SketchKind::Auto;
};

inline SketchKind resolve_sketch(SketchKind k, double p)
{
    if (k != SketchKind::Auto)
        return k;
    if (p < 2.0)
        return SketchKind::SparseStable;
    if (p == 2.0)
        return SketchKind::Gaussian;
    return SketchKind::RowSampling;
}

inline std::size_t default_sketch_rows(SketchKind k, std::size_t n, std::size_t d)
{
    const double dd = static_cast<double>(d);
    switch (k) {
    case SketchKind::Identity:
        return n;
    case SketchKind::Gaussian:
        return 4 * d;
    case SketchKind::SparseStable:
        return std::min(n, 8 * d * d);
    case SketchKind::RowSampling:
        return std::min<std::size_t>(
            n, static_cast<std::size_t>(std::ceil(8.0 * dd * dd * std::log(static_cast<double>(n)))));
    case SketchKind::Auto:
        break;
    }
    throw Error(Errc::InvalidArgument, "unresolved sketch kind");
}

/// S·A for the given sketch kind.
inline DenseMatrix apply_sketch(const DenseMatrix& a, double p, SketchKind kind, std::size_t m, CounterRng& rng)
{
    const std::size_t n = a.rows(), d = a.cols();
    switch (kind) {
    case SketchKind::Identity:
        return a;
    case SketchKind::Gaussian: {
        DenseMatrix s(m, n);
        for (auto& v : s.data())
            v = rng.gaussian();
        return s * a;
    }
    case SketchKind::SparseStable: {
        DenseMatrix sa(m, d);
        // with at least as many buckets as rows, rows get distinct buckets
        std::vector<std::size_t> perm;
        if (m >= n) {
            perm.resize(m);
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            for (std::size_t t = 0; t < n; ++t)
                std::swap(perm[t], perm[t + static_cast<std::size_t>(rng.below(m - t))]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t bucket = m >= n ? perm[i] : static_cast<std::size_t>(rng.below(m));
            const double c = rng.symmetric_stable(std::min(p, 2.0));
            auto src = a.row(i);
            for (std::size_t j = 0; j < d; ++j)
                sa(bucket, j) += c * src[j];
        }
        return sa;
    }
    case SketchKind::RowSampling: {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t t = 0; t < m; ++t)
            std::swap(idx[t], idx[t + static_cast<std::size_t>(rng.below(n - t))]);
        const double w = std::pow(static_cast<double>(n) / static_cast<double>(m), 1.0 / p);
        DenseMatrix sa(m, d);
        for (std::size_t t = 0; t < m; ++t) {
            auto src = a.row(idx[t]);
            for (std::size_t j = 0; j < d; ++j)
                sa(t, j) = w * src[j];
        }
        return sa;
    }
    case SketchKind::Auto:
        break;
    }
    throw Error(Errc::InvalidArgument, "unresolved sketch kind");
}

/// Invertible R with ‖Rx‖₂ ≤ ‖Ax‖_p ≤ κ̂‖Rx‖₂ on the sampled x.
inline ConditionerResult randomized_conditioner(const DenseMatrix& a, double p, const ConditionerConfig& cfg = {})
{
    require_valid_p(p);
    if (a.empty() || a.rows() < a.cols())
        throw Error(Errc::ShapeMismatch, "expected a non-empty matrix with rows >= cols");
    const std::size_t n = a.rows(), d = a.cols();
    const SketchKind kind = resolve_sketch(cfg.sketch, p);
    const std::size_t m = cfg.sketch_rows ? cfg.sketch_rows : default_sketch_rows(kind, n, d);
    if (m < d)
        throw Error(Errc::InvalidArgument, "sketch has fewer rows than A has columns");

    ConditionerResult out;
    out.sketch = kind;
    out.sketch_rows = m;
    DenseMatrix r;
    for (int attempt = 0;; ++attempt) {
        out.attempts = attempt + 1;
        CounterRng rng(cfg.seed, 0x534b4554ULL + static_cast<std::uint64_t>(attempt));
        try {
            r = qr(apply_sketch(a, p, kind, m, rng)).R;
            break;
        } catch (const Error& e) {
            if (e.code() != Errc::RankDeficient)
                throw;
            if (attempt >= cfg.max_retries || kind == SketchKind::Identity)
                throw Error(Errc::RankDeficient, "sketched matrix stayed rank deficient after retries");
        }
    }

    CounterRng rng(cfg.seed, 0x524154494fULL);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    Vector x(d);
    std::vector<std::pair<double, Vector>> worst; // smallest ratios seen, for the oracle starts
    for (std::size_t s = 0; s < cfg.samples; ++s) {
        for (auto& t : x)
            t = rng.gaussian();
        const double den = norm2(r * x);
        if (!(den > 0.0))
            continue;
        const double q = pnorm(a * x, p) / den;
        lo = std::min(lo, q);
        hi = std::max(hi, q);
        if (cfg.oracle_points) {
            worst.emplace_back(q, x);
            if (worst.size() > 4 * d) {
                std::nth_element(worst.begin(), worst.begin() + static_cast<std::ptrdiff_t>(2 * d), worst.end(),
                                 [](const auto& u, const auto& v) { return u.first < v.first; });
                worst.resize(2 * d);
            }
        }
    }
    if (cfg.oracle_points) {
        // min of ‖Ax‖_p/‖Rx‖₂ is 1/√max{xᵀRᵀRx : ‖Ax‖_p ≤ 1}
        const LevelSet L(a, p);
        const DenseMatrix m2 = r.transpose() * r;
        std::vector<Vector> starts;
        const SvdResult rs = svd(r);
        for (std::size_t i = 0; i < d; ++i)
            starts.push_back(rs.V.col(i));
        for (auto& w : worst)
            starts.push_back(std::move(w.second));
        for (const auto& bp : search_quadratic_max(L, m2, starts, AscentOptions{100, 1e-10}))
            if (bp.value > 0.0)
                lo = std::min(lo, 1.0 / std::sqrt(bp.value));
    }
    if (!(lo > 0.0) || !std::isfinite(lo))
        throw Error(Errc::RankDeficient, "conditioner maps a sampled direction to zero");
    out.rescale = lo;
    out.R = r * lo;
    out.kappa_hat = hi / lo;
    out.U = a * invert(out.R);
    return out;
}

/// ‖·‖p-SVD from the randomized conditioner: R = ŨDVᵀ, U = A(DVᵀ)⁻¹.
inline LpSvd lp_svd_randomized(const DenseMatrix& a, double p, const ConditionerConfig& cfg = {})
{
    detail::require_tall_full_rank_shape(a);
    const ConditionerResult c = randomized_conditioner(a, p, cfg);
    SvdResult s = svd(c.R);
    LpSvd out;
    out.U = detail::left_factor(a, s.S, s.V);
    out.D = std::move(s.S);
    out.V = std::move(s.V);
    out.p = p;
    out.distortion = c.kappa_hat;
    return out;
}

} // namespace lplr
