#pragma once

//
// Löwner (minimum-volume enclosing) ellipsoid of L = {x : ‖Ax‖_p ≤ 1}.
//
// Two phases:
//  1. Ellipsoid method. Start from a ball containing L; while the center
//     is outside L apply central cuts; test the 2d vertices of the
//     contracted ellipsoid γ(E − c) + c against L; if one escapes, cut at
//     the supporting hyperplane of L through the farthest vertex with a
//     shallow cut. Stops when every contracted vertex is in L.
//  2. Contact-point refinement. The cut phase only certifies the pair
//     γE ⊆ L ⊆ E, which leaves the shape loose. The refinement solves the
//     symmetric minimum-volume problem over boundary points of L, adding
//     points found by boundary_search until none escapes the ellipsoid,
//     and rescales so the best point found lies on the boundary.
// The smaller of the two ellipsoids is returned as (D, V) with
// F⁻¹ = V·D²·Vᵀ, i.e. D holds the reciprocal semi-axis lengths.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "boundary_search.hpp"
#include "ellipsoid.hpp"
#include "error.hpp"
#include "level_set.hpp"
#include "matcore.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace lplr {

enum class Contraction { InvD, InvSqrtD };

/// How an escaping contracted vertex is cut away.
///  Shallow: the fixed-constant shallow cut (falls back to a general-depth
///           cut when the separating hyperplane is deeper than 1/(d+1)).
///  Slab:    the two-sided cut |gᵀx| ≤ 1/‖g‖∞ around the origin, valid because
///           L is centrally symmetric. Needs `symmetrize`.
enum class CutRule { Shallow, Slab };

inline double contraction_factor(Contraction c, std::size_t d)
{
    const double dd = static_cast<double>(d);
    return c == Contraction::InvD ? 1.0 / dd : 1.0 / std::sqrt(dd);
}

struct LownerConfig {
    Contraction contraction = Contraction::InvD;
    double vertex_tol = 1e-7;
    double center_tol = 1e-9;
    bool symmetrize = true;
    CutRule cut_rule = CutRule::Slab;
    std::size_t max_cuts = 0; // 0 means 200·d²

    bool refine = true;
    int refine_max_rounds = 60;
    double refine_tol = 1e-2;         // stop when no boundary point exceeds the ellipsoid by this much
    double refine_inner_tol = 1e-3;   // optimality tolerance of the weight solver
    std::size_t refine_random_starts = 2; // per round
    std::size_t final_random_starts = 0;  // containment sweep; 0 means 2d
    std::size_t final_samples = 0;        // random boundary points screened for extra starts; 0 means max(1000, 100d)
    std::uint64_t seed = 0x5eed;
    AscentOptions ascent{30, 1e-5};     // inside the rounds
    AscentOptions final_ascent{100, 1e-10}; // containment sweep
};

struct LownerResult {
    DiagMatrix D;  // reciprocal semi-axis lengths, non-increasing
    DenseMatrix V; // orthogonal, columns are the axes
    std::size_t iterations_central = 0;
    std::size_t iterations_shallow = 0; // cuts at escaping vertices (shallow, depth or slab)
    Ellipsoid ellipsoid;            // the returned E (center 0)
    Ellipsoid cut_ellipsoid;        // E at the end of the cut phase
    std::vector<double> cut_log_det; // log det F after each cut, starting with the initial ball
    int refine_rounds = 0;
    std::size_t contact_points = 0;
    bool refined = false;           // true when the refined ellipsoid was returned
};

/// Thrown when the cut budget runs out; carries the last iterate.
class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& what, Ellipsoid best) : Error(Errc::NoConvergence, what), best_(std::move(best)) {}
    const Ellipsoid& best() const noexcept { return best_; }

private:
    Ellipsoid best_;
};

/// Ball around the origin containing L, radius r = n^{max(0, 1/2−1/p)} / σ_min(A).
/// Uses ‖Ax‖_p ≥ n^{−max(0, 1/2−1/p)}·‖Ax‖₂ ≥ n^{−max(0, 1/2−1/p)}·σ_min(A)·‖x‖₂.
inline Ellipsoid initial_ball(const LevelSet& L)
{
    const std::size_t n = L.A.rows(), d = L.A.cols();
    if (n < d)
        throw Error(Errc::RankDeficient, "A has fewer rows than columns");
    const Vector s = singular_values(L.A);
    const double smax = s.front(), smin = s.back();
    if (!(smin > 1e-10 * smax))
        throw Error(Errc::RankDeficient, "A is numerically rank deficient");
    const double expo = std::isinf(L.p) ? 0.5 : std::max(0.0, 0.5 - 1.0 / L.p);
    const double r = std::pow(static_cast<double>(n), expo) / smin;
    return Ellipsoid::ball(d, r);
}

namespace detail {

inline Vector normalized_by_max(Vector g)
{
    double m = 0.0;
    for (double v : g)
        m = std::max(m, std::abs(v));
    for (auto& v : g)
        v /= m;
    return g;
}

struct CutState {
    Ellipsoid e;
    std::size_t central = 0;
    std::size_t shallow = 0;
    std::vector<double> log_dets;
};

// Runs the ellipsoid-method loop until every contracted vertex is in L.
inline void run_cuts(const LevelSet& L, const LownerConfig& cfg, CutState& st)
{
    const std::size_t d = L.dim();
    const double dd = static_cast<double>(d);
    const double gamma = contraction_factor(cfg.contraction, d);
    const std::size_t cap = cfg.max_cuts ? cfg.max_cuts : 200 * d * d;

    auto record = [&] {
        st.log_dets.push_back(log_det(st.e));
        if (cfg.symmetrize)
            std::fill(st.e.center.begin(), st.e.center.end(), 0.0);
        if (st.central + st.shallow >= cap)
            throw NoConvergenceError("cut budget exhausted before the vertex test passed", st.e);
    };

    while (true) {
        while (L.gauge(st.e.center) > 1.0 + cfg.vertex_tol) {
            const Vector h = normalized_by_max(subgradient(L, st.e.center));
            st.e = central_cut(st.e, h);
            ++st.central;
            record();
        }

        const auto verts = contracted_vertices(st.e, gamma);
        std::size_t worst = 0;
        double worst_gauge = -1.0;
        for (std::size_t i = 0; i < verts.size(); ++i) {
            const double g = L.gauge(verts[i]);
            if (g > worst_gauge) { // strict: first index wins ties
                worst_gauge = g;
                worst = i;
            }
        }
        if (worst_gauge <= 1.0 + cfg.vertex_tol)
            return;

        // gᵀx ≤ ‖Ax‖_p ≤ 1 on L, with H = g/‖g‖∞ this is Hᵀx ≤ 1/‖g‖∞.
        const Vector g = subgradient(L, verts[worst]);
        double ginf = 0.0;
        for (double v : g)
            ginf = std::max(ginf, std::abs(v));
        const Vector h = normalized_by_max(g);
        const double scale = std::sqrt(dot(h, st.e.shape * h));
        const double depth = (1.0 / ginf - dot(h, st.e.center)) / scale;

        if (cfg.cut_rule == CutRule::Slab && cfg.symmetrize) {
            // center is 0 here, so depth is the slab half-width
            if (!(depth * depth * dd < 1.0))
                throw NoConvergenceError("escaping vertex does not yield a volume-reducing cut", st.e);
            st.e = slab_cut(st.e, h, depth);
        } else if (depth <= 1.0 / (dd + 1.0)) {
            st.e = shallow_cut(st.e, h);
        } else if (depth < 1.0 / dd) {
            st.e = depth_cut(st.e, h, -depth);
        } else {
            // Only reachable with contraction > 1/d. L is symmetric, so E − c
            // still contains L and the two-sided slab |gᵀx| ≤ 1/‖g‖∞ is valid.
            std::fill(st.e.center.begin(), st.e.center.end(), 0.0);
            const double beta = (1.0 / ginf) / scale;
            if (!(beta * beta * dd < 1.0))
                throw NoConvergenceError("escaping vertex does not yield a volume-reducing cut", st.e);
            st.e = slab_cut(st.e, h, beta);
        }
        ++st.shallow;
        record();
    }
}

struct WeightedPoints {
    std::vector<Vector> pts;
    Vector u;
};

inline DenseMatrix weighted_scatter(const WeightedPoints& w, std::size_t d)
{
    DenseMatrix x(d, d);
    for (std::size_t j = 0; j < w.pts.size(); ++j) {
        if (w.u[j] == 0.0)
            continue;
        const auto& s = w.pts[j];
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                x(a, b) += w.u[j] * s[a] * s[b];
    }
    return x;
}

inline DenseMatrix spd_inverse(const DenseMatrix& x)
{
    // via Cholesky: X⁻¹ = G⁻ᵀG⁻¹
    const DenseMatrix g = cholesky(x);
    const std::size_t d = x.rows();
    DenseMatrix ginv(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = j; i < d; ++i) {
            double s = (i == j) ? 1.0 : 0.0;
            for (std::size_t k = j; k < i; ++k)
                s -= g(i, k) * ginv(k, j);
            ginv(i, j) = s / g(i, i);
        }
    }
    return ginv.transpose() * ginv;
}

// Weights for the centered minimum-volume ellipsoid {x : xᵀX(u)⁻¹x ≤ d} of
// ±pts, X(u) = Σ u_j s_j s_jᵀ. Frank-Wolfe with away steps and
// Sherman-Morrison updates.
inline int solve_symmetric_mvee(WeightedPoints& w, std::size_t d, double tol, int max_iter = 200000)
{
    const std::size_t k = w.pts.size();
    const double dd = static_cast<double>(d);
    DenseMatrix xinv;
    Vector kappa(k);
    auto recompute = [&] {
        xinv = spd_inverse(weighted_scatter(w, d));
        for (std::size_t j = 0; j < k; ++j)
            kappa[j] = dot(w.pts[j], xinv * w.pts[j]);
    };
    recompute();
    for (int it = 0; it < max_iter; ++it) {
        std::size_t jp = 0, jm = k;
        for (std::size_t j = 0; j < k; ++j) {
            if (kappa[j] > kappa[jp])
                jp = j;
            if (w.u[j] > 0.0 && (jm == k || kappa[j] < kappa[jm]))
                jm = j;
        }
        const double kp = kappa[jp], km = kappa[jm];
        if (kp <= dd * (1.0 + tol))
            return it;

        std::size_t j;
        double lambda;
        if (kp - dd >= dd - km || w.u[jm] >= 1.0) {
            j = jp;
            lambda = (kp - dd) / (dd * (kp - 1.0));
        } else {
            j = jm;
            const double lmin = -w.u[jm] / (1.0 - w.u[jm]);
            lambda = km <= 1.0 ? lmin : std::max((km - dd) / (dd * (km - 1.0)), lmin);
        }
        const double a = lambda / (1.0 - lambda);
        const Vector v = xinv * w.pts[j];
        const double denom = 1.0 + a * kappa[j];
        if (!(denom > 1e-12))
            return it;
        for (std::size_t i = 0; i < k; ++i)
            w.u[i] *= (1.0 - lambda);
        w.u[j] += lambda;
        if (w.u[j] < 1e-15)
            w.u[j] = 0.0;
        const double inv1 = 1.0 / (1.0 - lambda);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c)
                xinv(r, c) = inv1 * (xinv(r, c) - a * v[r] * v[c] / denom);
        for (std::size_t i = 0; i < k; ++i) {
            const double sv = dot(w.pts[i], v);
            kappa[i] = inv1 * (kappa[i] - a * sv * sv / denom);
        }
        if ((it + 1) % 200 == 0)
            recompute();
    }
    return max_iter;
}

inline std::vector<Vector> random_directions(CounterRng& rng, std::size_t count, std::size_t d)
{
    std::vector<Vector> out(count, Vector(d));
    for (auto& v : out)
        for (auto& x : v)
            x = rng.gaussian();
    return out;
}

// The `keep` best of `count` random boundary points under xᵀMx.
inline std::vector<Vector> best_random_boundary(const LevelSet& L, const DenseMatrix& m, CounterRng& rng,
                                                std::size_t count, std::size_t keep)
{
    std::vector<BoundaryPoint> pts;
    pts.reserve(count);
    for (auto& u : random_directions(rng, count, L.dim())) {
        Vector x = to_boundary(L, u);
        const double v = quadratic_value(m, x);
        pts.push_back({std::move(x), v});
    }
    keep = std::min(keep, pts.size());
    std::partial_sort(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(keep), pts.end(),
                      [](const BoundaryPoint& a, const BoundaryPoint& b) { return a.value > b.value; });
    std::vector<Vector> out;
    for (std::size_t i = 0; i < keep; ++i)
        out.push_back(std::move(pts[i].x));
    return out;
}

inline void add_axis_starts(const DenseMatrix& shape, std::vector<Vector>& starts)
{
    const SymEigen eig = sym_eigen(shape);
    for (std::size_t i = 0; i < shape.rows(); ++i)
        starts.push_back(eig.Q.col(i));
}

struct Refinement {
    Ellipsoid e;
    int rounds = 0;
    std::size_t contacts = 0;
};

inline Refinement refine_lowner(const LevelSet& L, const Ellipsoid& outer, const LownerConfig& cfg)
{
    const std::size_t d = L.dim();
    const double dd = static_cast<double>(d);
    if (L.p == 2.0) {
        // L = {x : xᵀAᵀAx ≤ 1} is an ellipsoid and its own Löwner ellipsoid
        Refinement exact;
        exact.e = Ellipsoid{Vector(d, 0.0), spd_inverse(L.A.transpose() * L.A)};
        return exact;
    }
    CounterRng rng(cfg.seed, 0x4c4f574e4552ULL);
    const std::size_t final_starts = cfg.final_random_starts ? cfg.final_random_starts : 2 * d;

    WeightedPoints w;
    auto add_point = [&](const Vector& x) {
        for (const auto& p : w.pts)
            if (same_axis(p, x))
                return false;
        w.pts.push_back(x);
        w.u.push_back(0.0);
        return true;
    };

    // Seed with the boundary points along the axes of the outer ellipsoid
    // (they span ℝ^d) and the local maxima of its quadratic form.
    std::vector<Vector> starts;
    add_axis_starts(outer.shape, starts);
    for (const auto& s : starts)
        add_point(to_boundary(L, s));
    {
        const DenseMatrix m0 = spd_inverse(outer.shape);
        auto more = random_directions(rng, cfg.refine_random_starts, d);
        starts.insert(starts.end(), more.begin(), more.end());
        for (const auto& bp : search_quadratic_max(L, m0, starts, cfg.ascent))
            add_point(bp.x);
    }
    std::fill(w.u.begin(), w.u.end(), 1.0 / static_cast<double>(w.pts.size()));

    Refinement out;
    DenseMatrix m, x;
    const std::size_t screened = cfg.final_samples ? cfg.final_samples : std::max<std::size_t>(1000, 100 * d);
    const int max_rounds = std::max(1, cfg.refine_max_rounds);
    int round = 0;

    // Weight rounds until the round search stops finding points outside.
    auto run_rounds = [&] {
        for (; round < max_rounds;) {
            out.rounds = ++round;
            solve_symmetric_mvee(w, d, cfg.refine_inner_tol);
            // drop points outside the support; the search re-finds any that matter
            WeightedPoints kept;
            for (std::size_t j = 0; j < w.pts.size(); ++j)
                if (w.u[j] > 0.0) {
                    kept.pts.push_back(std::move(w.pts[j]));
                    kept.u.push_back(w.u[j]);
                }
            w = std::move(kept);
            x = weighted_scatter(w, d);
            m = spd_inverse(x) * (1.0 / dd);

            // restart from the 2d support points with the largest value, the
            // axes of the current ellipsoid and a few random directions
            std::vector<std::size_t> order(w.pts.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            Vector vals(w.pts.size());
            for (std::size_t j = 0; j < w.pts.size(); ++j)
                vals[j] = quadratic_value(m, w.pts[j]);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
            std::vector<Vector> st;
            for (std::size_t t = 0; t < std::min(order.size(), 2 * d); ++t)
                st.push_back(w.pts[order[t]]);
            add_axis_starts(x, st);
            auto more = random_directions(rng, cfg.refine_random_starts, d);
            st.insert(st.end(), more.begin(), more.end());

            double best = 0.0;
            bool grew = false;
            for (const auto& bp : search_quadratic_max(L, m, st, cfg.ascent)) {
                best = std::max(best, bp.value);
                if (bp.value > 1.0 + cfg.refine_tol)
                    grew |= add_point(bp.x);
            }
            if (best <= 1.0 + cfg.refine_tol || !grew)
                return;
        }
    };

    // Wider search: support points, axes, random directions and the best of
    // many random boundary points. Sets κ* and reports whether it found new
    // points well outside the current ellipsoid.
    double kappa_star = 0.0;
    auto wide_sweep = [&](const AscentOptions& opt) {
        std::vector<Vector> st = w.pts;
        add_axis_starts(x, st);
        auto more = random_directions(rng, final_starts, d);
        st.insert(st.end(), more.begin(), more.end());
        auto best_samples = best_random_boundary(L, m, rng, screened, 2 * d);
        st.insert(st.end(), best_samples.begin(), best_samples.end());
        kappa_star = 0.0;
        for (const auto& p : w.pts)
            kappa_star = std::max(kappa_star, quadratic_value(m, p));
        bool grew = false;
        for (const auto& bp : search_quadratic_max(L, m, st, opt)) {
            kappa_star = std::max(kappa_star, bp.value);
            if (bp.value > 1.0 + cfg.refine_tol)
                grew |= add_point(bp.x);
        }
        return grew;
    };

    run_rounds();
    while (round < max_rounds && wide_sweep(cfg.ascent))
        run_rounds();
    // the scale comes from a converged sweep
    while (wide_sweep(cfg.final_ascent) && round < max_rounds)
        run_rounds();

    out.contacts = w.pts.size();
    // E = {x : xᵀMx ≤ κ*}  ⇒  F = (M/κ*)⁻¹
    out.e = Ellipsoid{Vector(d, 0.0), spd_inverse(m * (1.0 / kappa_star))};
    return out;
}

// (D, V) with F⁻¹ = V·D²·Vᵀ via the upper Cholesky factor of F⁻¹ and its SVD.
inline void extract_axes(const Ellipsoid& e, LownerResult& r)
{
    const DenseMatrix finv = spd_inverse(e.shape);
    const DenseMatrix upper = cholesky(finv).transpose(); // upperᵀ·upper = F⁻¹
    SvdResult s = svd(upper);
    const std::size_t d = finv.rows();
    // deterministic column signs: largest-magnitude component positive
    for (std::size_t j = 0; j < d; ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::abs(s.V(i, j)) > std::abs(s.V(arg, j)))
                arg = i;
        if (s.V(arg, j) < 0.0)
            for (std::size_t i = 0; i < d; ++i)
                s.V(i, j) = -s.V(i, j);
    }
    r.D = s.S;
    r.V = std::move(s.V);
}

} // namespace detail

/// Löwner ellipsoid of {x : ‖Ax‖_p ≤ 1} for A with full column rank d >= 2.
inline LownerResult lowner(const DenseMatrix& a, double p, const LownerConfig& cfg = {})
{
    require_valid_p(p);
    const LevelSet L(a, p, cfg.vertex_tol);
    const std::size_t d = L.dim();
    if (d < 2)
        throw Error(Errc::DimensionTooSmall, "lowner needs at least two columns");

    detail::CutState st;
    st.e = initial_ball(L);
    st.log_dets.push_back(log_det(st.e));
    detail::run_cuts(L, cfg, st);

    LownerResult r;
    // L is centrally symmetric, so E − c ⊇ E ∩ (−E) ⊇ L.
    std::fill(st.e.center.begin(), st.e.center.end(), 0.0);
    r.cut_ellipsoid = st.e;
    Ellipsoid chosen = st.e;

    if (cfg.refine) {
        const detail::Refinement ref = detail::refine_lowner(L, st.e, cfg);
        r.refine_rounds = ref.rounds;
        r.contact_points = ref.contacts;
        if (log_det(ref.e) < log_det(st.e)) {
            // re-run the vertex test from the refined ellipsoid; its cuts
            // extend the recorded sequence
            detail::CutState polish;
            polish.e = ref.e;
            polish.log_dets.push_back(log_det(ref.e));
            detail::run_cuts(L, cfg, polish);
            std::fill(polish.e.center.begin(), polish.e.center.end(), 0.0);
            st.central += polish.central;
            st.shallow += polish.shallow;
            chosen = polish.e;
            r.refined = true;
            if (polish.log_dets.size() > 1)
                st.log_dets.insert(st.log_dets.end(), polish.log_dets.begin() + 1, polish.log_dets.end());
        }
    }

    r.iterations_central = st.central;
    r.iterations_shallow = st.shallow;
    r.cut_log_det = std::move(st.log_dets);
    r.ellipsoid = chosen;
    detail::extract_axes(chosen, r);
    return r;
}

} // namespace lplr
