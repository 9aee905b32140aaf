#include <gtest/gtest.h>

#include <cmath>

#include "lplr/lowner.hpp"
#include "support.hpp"

using namespace lplr;
using lplr::testing::gaussian_matrix;
using lplr::testing::gaussian_vector;
using lplr::testing::max_abs_diff;

namespace {

std::vector<std::vector<double>> to_rows(const DenseMatrix& m)
{
    std::vector<std::vector<double>> r(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            r[i][j] = m(i, j);
    return r;
}

double quad(const std::vector<std::vector<double>>& q, std::span<const double> x)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            s += x[i] * q[i][j] * x[j];
    return s;
}

// ‖D·Vᵀ·x‖₂²
double dv_quad(const LownerResult& r, std::span<const double> x)
{
    const Vector y = transpose_times(r.V, x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        s += r.D[i] * r.D[i] * y[i] * y[i];
    return s;
}

void expect_errc(Errc code, auto&& fn)
{
    try {
        fn();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

void expect_containment(const DenseMatrix& a, double p, const LownerResult& r, std::uint64_t seed)
{
    const LevelSet L(a, p);
    CounterRng rng(seed, 5);
    const std::size_t d = a.cols();
    for (int s = 0; s < 1000; ++s) {
        Vector u = gaussian_vector(d, rng);
        const double g = L.gauge(u);
        for (auto& v : u)
            v /= g;
        ASSERT_LE(quadratic_form(r.ellipsoid, u), 1.0 + 1e-6);
    }
    for (const auto& v : contracted_vertices(r.ellipsoid, 1.0 / static_cast<double>(d)))
        EXPECT_LE(L.gauge(v), 1.0 + 1e-7);
    for (std::size_t i = 1; i < r.cut_log_det.size(); ++i)
        EXPECT_LT(r.cut_log_det[i], r.cut_log_det[i - 1]) << "cut " << i;
}

} // namespace

TEST(Member, Examples)
{
    const LevelSet l1(DenseMatrix::identity(2), 1.0);
    EXPECT_TRUE(member(l1, Vector{0.5, 0.4}));
    EXPECT_FALSE(member(l1, Vector{0.8, 0.4}));
    const LevelSet l2(DenseMatrix::identity(2), 2.0);
    EXPECT_TRUE(member(l2, Vector{1.0, 0.0}));
}

TEST(Member, CentrallySymmetric)
{
    const LevelSet L(gaussian_matrix(10, 3, 1), 1.5);
    CounterRng rng(2);
    for (int s = 0; s < 200; ++s) {
        Vector x = gaussian_vector(3, rng);
        for (auto& v : x)
            v *= 0.3;
        Vector y = x;
        for (auto& v : y)
            v = -v;
        EXPECT_EQ(member(L, x), member(L, y));
    }
}

TEST(InitialBall, Examples)
{
    EXPECT_NEAR(initial_ball(LevelSet(DenseMatrix::identity(3), 2.0)).shape(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(initial_ball(LevelSet(DenseMatrix::diagonal(Vector{2, 1}), 2.0)).shape(1, 1), 1.0, 1e-12);
    EXPECT_NEAR(initial_ball(LevelSet(DenseMatrix::identity(2), 1.0)).shape(0, 0), 1.0, 1e-12);
}

TEST(InitialBall, ContainsLevelSet)
{
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        const DenseMatrix a = gaussian_matrix(30, 4, 11);
        const LevelSet L(a, p);
        const Ellipsoid b = initial_ball(L);
        CounterRng rng(3);
        for (int s = 0; s < 500; ++s) {
            Vector u = gaussian_vector(4, rng);
            const double g = L.gauge(u);
            for (auto& v : u)
                v /= g;
            EXPECT_LE(quadratic_form(b, u), 1.0 + 1e-9) << "p = " << p;
        }
    }
}

TEST(InitialBall, RankDeficient)
{
    expect_errc(Errc::RankDeficient, [] { initial_ball(LevelSet(DenseMatrix{{1, 2}, {2, 4}, {3, 6}}, 1.0)); });
}

TEST(Subgradient, Examples)
{
    const Vector g2 = subgradient(LevelSet(DenseMatrix::identity(2), 2.0), Vector{3, 4});
    EXPECT_NEAR(g2[0], 0.6, 1e-15);
    EXPECT_NEAR(g2[1], 0.8, 1e-15);
    const Vector g1 = subgradient(LevelSet(DenseMatrix::identity(2), 1.0), Vector{1, -2});
    EXPECT_EQ(g1[0], 1.0);
    EXPECT_EQ(g1[1], -1.0);
    expect_errc(Errc::ZeroGradient, [] { subgradient(LevelSet(DenseMatrix::identity(2), 1.0), Vector{0, 0}); });
}

TEST(Subgradient, FiniteDifferences)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const DenseMatrix a = gaussian_matrix(8, 4, 50 + seed);
        const LevelSet L(a, 1.5);
        CounterRng rng(seed, 9);
        const Vector x = gaussian_vector(4, rng);
        const Vector g = subgradient(L, x);
        const double h = 1e-6;
        for (std::size_t i = 0; i < 4; ++i) {
            Vector xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            // ‖Ay‖_p evaluated directly, not through the library norm
            auto norm = [&](const Vector& y) {
                double s = 0.0;
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    double t = 0.0;
                    for (std::size_t c = 0; c < 4; ++c)
                        t += a(r, c) * y[c];
                    s += std::pow(std::abs(t), 1.5);
                }
                return std::pow(s, 1.0 / 1.5);
            };
            EXPECT_NEAR(g[i], (norm(xp) - norm(xm)) / (2 * h), 1e-5);
        }
    }
}

TEST(CentralCut, UnitBall)
{
    const Ellipsoid e = central_cut(Ellipsoid::ball(2, 1.0), Vector{1, 0});
    EXPECT_NEAR(e.center[0], -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(e.center[1], 0.0, 1e-15);
    const DenseMatrix want = DenseMatrix::diagonal(Vector{4.0 / 9.0, 4.0 / 3.0});
    EXPECT_LT(max_abs_diff(e.shape, want), 1e-14);

    const Ellipsoid s = central_cut(Ellipsoid::ball(2, 1.0), Vector{0, 1});
    EXPECT_NEAR(s.center[1], -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(s.shape(0, 0), 4.0 / 3.0, 1e-14);
    EXPECT_NEAR(s.shape(1, 1), 4.0 / 9.0, 1e-14);
}

TEST(CentralCut, Degenerate)
{
    expect_errc(Errc::NotPositiveDefinite, [] { central_cut(Ellipsoid::ball(2, 1.0), Vector{0, 0}); });
}

TEST(ShallowCut, UnitBall)
{
    const Ellipsoid e = shallow_cut(Ellipsoid::ball(2, 1.0), Vector{1, 0});
    EXPECT_NEAR(e.center[0], -1.0 / 9.0, 1e-15);
    EXPECT_NEAR(e.center[1], 0.0, 1e-15);
    const double zs = (1.0 + 1.0 / 72.0) * (32.0 / 27.0);
    const DenseMatrix want = DenseMatrix::diagonal(Vector{zs * (1.0 - 1.0 / 3.0), zs});
    EXPECT_LT(max_abs_diff(e.shape, want), 1e-14);
}

TEST(ShallowCut, DimensionOne)
{
    expect_errc(Errc::DimensionTooSmall, [] { shallow_cut(Ellipsoid::ball(1, 1.0), Vector{1}); });
}

TEST(ShallowCut, SymmetricAndVolumeDecreasing)
{
    CounterRng rng(17);
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 2 + static_cast<std::size_t>(rng.below(5));
        const DenseMatrix b = gaussian_matrix(d, d, 1000 + static_cast<std::uint64_t>(t));
        Ellipsoid e{gaussian_vector(d, rng), b * b.transpose() + DenseMatrix::identity(d) * 0.1};
        const Ellipsoid s = shallow_cut(e, gaussian_vector(d, rng));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                EXPECT_NEAR(s.shape(i, j), s.shape(j, i), 1e-12);
        EXPECT_LT(lplr::testing::gj_log_det(to_rows(s.shape)), lplr::testing::gj_log_det(to_rows(e.shape)));
    }
}

TEST(ShallowCut, KeepsTheCutHalfspace)
{
    // points of E with Hᵀ(x−c) ≤ √(HᵀFH)/(d+1) stay inside E'
    const std::size_t d = 3;
    const Ellipsoid e = Ellipsoid::ball(d, 1.0);
    const Vector h{1, 0, 0};
    const Ellipsoid s = shallow_cut(e, h);
    CounterRng rng(4);
    for (int t = 0; t < 2000; ++t) {
        Vector x = gaussian_vector(d, rng);
        const double r = norm2(x) / std::cbrt(rng.uniform());
        for (auto& v : x)
            v /= r;
        if (x[0] <= 1.0 / (d + 1.0)) {
            EXPECT_LE(quadratic_form(s, x), 1.0 + 1e-12);
        }
    }
}

TEST(SlabCut, KeepsTheSlabAndShrinks)
{
    const std::size_t d = 4;
    const Ellipsoid e = Ellipsoid::ball(d, 1.0);
    const Vector h{0, 1, 0, 0};
    const Ellipsoid s = slab_cut(e, h, 0.3);
    EXPECT_LT(log_det(s), log_det(e));
    CounterRng rng(5);
    for (int t = 0; t < 2000; ++t) {
        Vector x = gaussian_vector(d, rng);
        const double r = norm2(x) / std::pow(rng.uniform(), 0.25);
        for (auto& v : x)
            v /= r;
        if (std::abs(x[1]) <= 0.3) {
            EXPECT_LE(quadratic_form(s, x), 1.0 + 1e-12);
        }
    }
}

TEST(ContractedVertices, Examples)
{
    auto sorted = [](std::vector<Vector> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    auto near = [](const std::vector<Vector>& a, const std::vector<Vector>& b) {
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < a[i].size(); ++j)
                EXPECT_NEAR(a[i][j], b[i][j], 1e-14);
    };
    near(sorted(contracted_vertices(Ellipsoid::ball(2, 1.0), 0.5)),
         sorted({{0.5, 0}, {-0.5, 0}, {0, 0.5}, {0, -0.5}}));
    near(sorted(contracted_vertices(Ellipsoid{{0, 0}, DenseMatrix::diagonal(Vector{4, 1})}, 1.0)),
         sorted({{2, 0}, {-2, 0}, {0, 1}, {0, -1}}));
    near(sorted(contracted_vertices(Ellipsoid{{1, 1}, DenseMatrix::identity(2)}, 1.0)),
         sorted({{2, 1}, {0, 1}, {1, 2}, {1, 0}}));
}

TEST(Lowner, EuclideanBallIsItsOwnEllipsoid)
{
    const LownerResult r = lowner(DenseMatrix::identity(2), 2.0);
    EXPECT_NEAR(r.D[0], 1.0, 1e-6);
    EXPECT_NEAR(r.D[1], 1.0, 1e-6);
}

TEST(Lowner, EllipseIsItsOwnEllipsoid)
{
    const LownerResult r = lowner(DenseMatrix::diagonal(Vector{2, 1}), 2.0);
    EXPECT_NEAR(r.D[0], 2.0, 1e-9);
    EXPECT_NEAR(r.D[1], 1.0, 1e-9);
    EXPECT_NEAR(std::abs(r.V(0, 0)), 1.0, 1e-6);
    EXPECT_NEAR(std::abs(r.V(1, 1)), 1.0, 1e-6);
}

TEST(Lowner, CrossPolytopeMatchesKhachiyan)
{
    const LownerResult r = lowner(DenseMatrix::identity(2), 1.0);
    const auto oracle = lplr::testing::khachiyan_mvee({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}, 1e-10);
    // the oracle's Q is the unit disc
    EXPECT_NEAR(oracle.Q[0][0], 1.0, 1e-3);
    EXPECT_NEAR(oracle.Q[1][1], 1.0, 1e-3);
    EXPECT_NEAR(r.D[0], std::sqrt(oracle.Q[0][0]), 0.05);
    EXPECT_NEAR(r.D[1], std::sqrt(oracle.Q[1][1]), 0.05);
}

TEST(Lowner, AxisAlignedCrossPolytopeMatchesKhachiyan)
{
    const DenseMatrix a = DenseMatrix::diagonal(Vector{3, 2, 1});
    const LownerResult r = lowner(a, 1.0);
    const auto oracle = lplr::testing::khachiyan_mvee(lplr::testing::l1_ball_vertices_3d(a), 1e-10);
    EXPECT_NEAR(r.D[0], 3.0, 0.15);
    EXPECT_NEAR(r.D[1], 2.0, 0.10);
    EXPECT_NEAR(r.D[2], 1.0, 0.05);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_NEAR(std::sqrt(oracle.Q[i][i]), r.D[i], 0.05 * r.D[i]);
}

TEST(Lowner, RandomL1PolytopeMatchesKhachiyan)
{
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const DenseMatrix a = gaussian_matrix(6, 3, 600 + seed);
        const LownerResult r = lowner(a, 1.0);
        const auto oracle = lplr::testing::khachiyan_mvee(lplr::testing::l1_ball_vertices_3d(a), 1e-10);
        // volume: log det F⁻¹ versus log det Q
        const double ld_ours = 2.0 * (std::log(r.D[0]) + std::log(r.D[1]) + std::log(r.D[2]));
        const double ld_oracle = lplr::testing::gj_log_det(oracle.Q);
        EXPECT_NEAR(ld_ours, ld_oracle, std::log(1.1)) << "seed " << seed;
        CounterRng rng(seed, 8);
        for (int s = 0; s < 200; ++s) {
            const Vector x = gaussian_vector(3, rng);
            // ‖DVᵀx‖₂ against the oracle's norm √(xᵀQx)
            const double ratio = std::sqrt(dv_quad(r, x) / quad(oracle.Q, x));
            EXPECT_NEAR(ratio, 1.0, 0.1) << "seed " << seed;
        }
    }
}

TEST(Lowner, ResultShape)
{
    const LownerResult r = lowner(gaussian_matrix(40, 5, 7), 1.5);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_GT(r.D[i], 0.0);
        if (i) {
            EXPECT_GE(r.D[i - 1], r.D[i]);
        }
    }
    EXPECT_LT(max_abs_diff(r.V.transpose() * r.V, DenseMatrix::identity(5)), 1e-8);
}

TEST(Lowner, ContainmentAndVolume)
{
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        const DenseMatrix a = gaussian_matrix(30, 4, 70);
        const LownerResult r = lowner(a, p);
        expect_containment(a, p, r, 71);
    }
}

TEST(Lowner, InvSqrtDContraction)
{
    LownerConfig cfg;
    cfg.contraction = Contraction::InvSqrtD;
    const DenseMatrix a = gaussian_matrix(30, 4, 72);
    const LownerResult r = lowner(a, 1.0, cfg);
    const LevelSet L(a, 1.0);
    for (const auto& v : contracted_vertices(r.ellipsoid, 0.5))
        EXPECT_LE(L.gauge(v), 1.0 + 1e-7);
}

TEST(Lowner, ShallowCutRule)
{
    LownerConfig cfg;
    cfg.cut_rule = CutRule::Shallow;
    cfg.refine = false;
    for (const DenseMatrix& a : {DenseMatrix::identity(2), gaussian_matrix(10, 2, 73), gaussian_matrix(12, 3, 74)}) {
        const LownerResult r = lowner(a, 1.0, cfg);
        EXPECT_FALSE(r.refined);
        expect_containment(a, 1.0, r, 75);
    }
}

TEST(Lowner, LinearEquivariance)
{
    const DenseMatrix a = gaussian_matrix(30, 3, 80);
    const DenseMatrix t = DenseMatrix{{1.0, 0.5, 0.0}, {0.0, 2.0, 0.3}, {0.2, 0.0, 0.7}};
    const LownerResult r = lowner(a, 1.0);
    const LownerResult rt = lowner(a * t, 1.0);
    CounterRng rng(81);
    for (int s = 0; s < 200; ++s) {
        const Vector y = gaussian_vector(3, rng);
        const double lhs = dv_quad(rt, y);
        const double rhs = dv_quad(r, t * y);
        EXPECT_NEAR(std::sqrt(lhs / rhs), 1.0, 0.1);
    }
}

TEST(Lowner, ScaleCovariance)
{
    const DenseMatrix a = gaussian_matrix(30, 4, 82);
    const LownerResult r = lowner(a, 1.5);
    const LownerResult rs = lowner(a * 3.0, 1.5);
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_NEAR(rs.D[i] / r.D[i], 3.0, 0.3);
    // V-span: the quadratic forms agree up to the scale
    CounterRng rng(83);
    for (int s = 0; s < 100; ++s) {
        const Vector x = gaussian_vector(4, rng);
        EXPECT_NEAR(std::sqrt(dv_quad(rs, x) / dv_quad(r, x)), 3.0, 0.3);
    }
}

TEST(Lowner, Errors)
{
    expect_errc(Errc::DimensionTooSmall, [] { lowner(DenseMatrix{{1}, {2}}, 1.0); });
    expect_errc(Errc::RankDeficient, [] { lowner(DenseMatrix{{1, 2}, {2, 4}, {3, 6}}, 1.0); });
    expect_errc(Errc::InvalidP, [] { lowner(DenseMatrix::identity(2), 0.5); });

    LownerConfig cfg;
    cfg.max_cuts = 1;
    try {
        lowner(gaussian_matrix(50, 4, 84), 1.0, cfg);
        FAIL() << "expected NoConvergence";
    } catch (const NoConvergenceError& e) {
        EXPECT_EQ(e.code(), Errc::NoConvergence);
        EXPECT_EQ(e.best().dim(), 4u);
    }
}

TEST(Lowner, Deterministic)
{
    const DenseMatrix a = gaussian_matrix(25, 4, 85);
    const LownerResult r1 = lowner(a, 1.0), r2 = lowner(a, 1.0);
    EXPECT_EQ(r1.D, r2.D);
    EXPECT_EQ(r1.V, r2.V);
}
