#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "bilayer/diagnostics.hpp"
#include "bilayer/variational.hpp"

using namespace bilayer;

namespace {

constexpr double pi = std::numbers::pi;

struct TorusCase {
    std::shared_ptr<TorusProblem> pb;
    GridPtr g;
};

TorusCase make_torus(const CouplingParams& params, const VortexConfiguration& vc, double L, int n)
{
    auto g = Grid::periodic(L, L, n, n);
    const CouplingMatrix K = build_coupling(params);
    const AlphaBeta ab = alpha_beta(L * L, params, vc);
    TorusBackground bg = torus_background(vc, g, default_epsilon(*g));
    auto pb = std::make_shared<TorusProblem>(K, bg, L * L, vc.Nplus(), vc.Nminus(), ab.alpha, ab.beta);
    return {pb, g};
}

std::shared_ptr<BoundedProblem> make_disk(const CouplingParams& params, const VortexConfiguration& vc, double R,
                                          int n)
{
    auto g = Grid::disk(R, n);
    return std::make_shared<BoundedProblem>(build_coupling(params),
                                            regularized_background(vc, default_epsilon(*g), g));
}

// Reduced functional at zeta, with xi and the means from the constraint.
double reduced_I(ReducedProblem& pb, const Vec& zeta, Vec& xi_warm)
{
    InnerSettings is;
    is.tol = 1e-12;
    InnerResult r = pb.inner(zeta, xi_warm, is);
    return pb.functional(xi_warm, zeta, r.xibar, r.zetabar);
}

Vec smooth_direction(const Grid& g, bool project_mean)
{
    Vec d(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        Point p = g.node(k);
        d[k] = std::sin(2 * pi * p.x / (g.is_periodic() ? g.length_x() : 7.0) + 0.3) *
               std::cos(2 * pi * p.y / (g.is_periodic() ? g.length_y() : 9.0));
        if (!g.unknown(k))
            d[k] = 0;
    }
    if (project_mean) {
        double m = 0;
        for (double x : d)
            m += x;
        m /= static_cast<double>(d.size());
        for (double& x : d)
            x -= m;
    }
    return d;
}

void check_gradient(ReducedProblem& pb, const Vec& zeta0)
{
    const Grid& g = *pb.grid();
    Vec xi(g.size(), 0.0);
    InnerSettings is;
    is.tol = 1e-12;
    InnerResult r = pb.inner(zeta0, xi, is);
    Vec gr;
    pb.outer_residual(xi, zeta0, r.xibar, r.zetabar, gr);
    Vec d = smooth_direction(g, pb.torus());
    const double analytic = pb.weight() * dot(gr, d);
    const double delta = 1e-4;
    Vec zp = zeta0, zm = zeta0, xp = xi, xm = xi;
    for (std::size_t k = 0; k < d.size(); ++k) {
        zp[k] += delta * d[k];
        zm[k] -= delta * d[k];
    }
    const double fd = (reduced_I(pb, zp, xp) - reduced_I(pb, zm, xm)) / (2 * delta);
    EXPECT_NEAR(fd, analytic, 1e-5 * std::max(1.0, std::abs(analytic)));
}

} // namespace

TEST(Gradient, TorusMatchesFiniteDifference)
{
    auto tc = make_torus({1.0, -0.5}, {{{1.0, 1.0}, {4.0, 2.0}}, {{2.5, 4.5}}}, 2 * pi, 48);
    Vec zeta = smooth_direction(*tc.g, true);
    for (double& z : zeta)
        z *= 0.3;
    check_gradient(*tc.pb, zeta);
}

TEST(Gradient, DiskMatchesFiniteDifference)
{
    auto pb = make_disk({1.0, -0.5}, {{{0.5, 0.0}}, {{-1.0, 0.5}}}, 4.0, 49);
    Vec zeta = smooth_direction(*pb->grid(), false);
    for (double& z : zeta)
        z *= 0.2;
    check_gradient(*pb, zeta);
}

TEST(Inner, UniqueFromRandomStarts)
{
    auto tc = make_torus({1.0, -0.5}, {{{1.0, 1.0}}, {{4.0, 3.0}}}, 2 * pi, 32);
    Vec zeta = smooth_direction(*tc.g, true);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vec ref;
    for (int trial = 0; trial < 5; ++trial) {
        Vec xi(tc.g->size());
        for (double& x : xi)
            x = U(rng);
        InnerSettings is;
        is.tol = 1e-11;
        tc.pb->inner(zeta, xi, is);
        if (ref.empty()) {
            ref = xi;
            continue;
        }
        double diff = 0;
        for (std::size_t k = 0; k < xi.size(); ++k)
            diff = std::max(diff, std::abs(xi[k] - ref[k]));
        EXPECT_LT(diff, 1e-8);
    }
}

TEST(Torus, ConstraintsHoldAfterMeanUpdate)
{
    const CouplingParams params{1.0, -0.5};
    const VortexConfiguration vc{{{1.0, 1.0}, {4.0, 2.0}}, {{2.5, 4.5}}};
    TorusSolve ts = solve_torus(params, vc, 2 * pi, 2 * pi, 48, 48, OuterSettings{});
    ASSERT_TRUE(ts.report.converged) << ts.report.status;
    for (const auto& id : torus_identities(ts.u, ts.v, params, vc))
        EXPECT_TRUE(id.pass) << id.name << " " << id.rel_error;
}

TEST(Torus, DescentWithinResolution)
{
    auto tc = make_torus({1.0, -0.5}, {{{1.0, 1.0}, {4.0, 2.0}}, {{2.5, 4.5}}}, 2 * pi, 32);
    SolveReport rep;
    nested_minimize(*tc.pb, zero_state(*tc.pb), OuterSettings{}, rep);
    ASSERT_TRUE(rep.converged);
    for (std::size_t i = 1; i < rep.history.size(); ++i)
        EXPECT_LE(rep.history[i].I, rep.history[i - 1].I + resolution(rep.history[i - 1].I));
}

TEST(Torus, NoVortexIsImmediate)
{
    auto tc = make_torus({1.0, -0.5}, {}, 2 * pi, 32);
    for (OuterMethod m : {OuterMethod::GradientBB, OuterMethod::NewtonKrylov}) {
        OuterSettings s;
        s.method = m;
        SolveReport rep;
        VariationalState st = nested_minimize(*tc.pb, zero_state(*tc.pb), s, rep);
        EXPECT_TRUE(rep.converged);
        EXPECT_LE(rep.iterations, 2);
        auto [u, v] = recover_uv(st, *tc.pb);
        // e^u = e^v = 1/(k11 + k12) = 1/2
        EXPECT_NEAR(u[0], -std::numbers::ln2, 1e-9);
        EXPECT_NEAR(v[5], -std::numbers::ln2, 1e-9);
    }
}

TEST(Symmetry, SwapIsBitwise)
{
    const CouplingParams params{1.0, -0.5};
    const VortexConfiguration vc{{{1.0, 1.0}, {4.0, 2.0}}, {{2.5, 4.5}}};
    OuterSettings s;
    TorusSolve a = solve_torus(params, vc, 2 * pi, 2 * pi, 32, 32, s);
    TorusSolve b = solve_torus(params, vc.swapped(), 2 * pi, 2 * pi, 32, 32, s);
    ASSERT_TRUE(a.report.converged && b.report.converged);
    EXPECT_EQ(a.ab.alpha, b.ab.beta);
    EXPECT_EQ(0, std::memcmp(a.u.data(), b.v.data(), a.u.size() * sizeof(double)));
    EXPECT_EQ(0, std::memcmp(a.v.data(), b.u.data(), a.v.size() * sizeof(double)));
}

TEST(Symmetry, ZetaVanishesForSymmetricConfigurations)
{
    const CouplingParams params{1.0, -0.5};
    const VortexConfiguration vc{{{2.0, 2.0}}, {{2.0, 2.0}}};
    TorusSolve ts = solve_torus(params, vc, 2 * pi, 2 * pi, 32, 32, OuterSettings{});
    ASSERT_TRUE(ts.report.converged);
    double m = 0;
    for (double z : ts.state.zeta.values)
        m = std::max(m, std::abs(z));
    EXPECT_EQ(m, 0.0);
    EXPECT_EQ(ts.state.zetabar, 0.0);
}

TEST(Guards, OverflowIsReported)
{
    auto pb = make_disk({1.0, -0.5}, {{{0.0, 0.0}}, {}}, 3.0, 33);
    VariationalState st = zero_state(*pb);
    for (std::size_t k = 0; k < st.zeta.size(); ++k)
        if (pb->grid()->unknown(k))
            st.zeta[k] = 2000.0;
    try {
        functional_I_bounded(st, pb->background(), pb->coupling());
        FAIL() << "expected DiagnosticOverflow";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.kind(), SolverErrorKind::DiagnosticOverflow);
    }
}

TEST(Guards, InfeasibleTorus)
{
    const CouplingParams params{1.0, -0.5};
    VortexConfiguration vc{{{0.1, 0.1}, {0.2, 0.2}, {0.3, 0.1}}, {}};
    EXPECT_THROW(
        {
            try {
                solve_torus(params, vc, 1.0, 1.0, 16, 16, OuterSettings{});
            } catch (const SolverError& e) {
                EXPECT_EQ(e.kind(), SolverErrorKind::Infeasible);
                throw;
            }
        },
        SolverError);
}

TEST(Recovery, StateRoundTrip)
{
    auto tc = make_torus({1.0, -0.5}, {{{1.0, 1.0}}, {}}, 2 * pi, 24);
    VariationalState st = zero_state(*tc.pb);
    Vec d = smooth_direction(*tc.g, true);
    for (std::size_t k = 0; k < d.size(); ++k) {
        st.xi[k] = d[k];
        st.zeta[k] = -0.5 * d[k];
    }
    st.xibar = 0.25;
    st.zetabar = -0.1;
    auto [u, v] = recover_uv(st, *tc.pb);
    VariationalState back = state_from_uv(u, v, *tc.pb);
    EXPECT_NEAR(back.xibar, 0.25, 1e-13);
    EXPECT_NEAR(back.zetabar, -0.1, 1e-13);
    for (std::size_t k = 0; k < d.size(); ++k)
        EXPECT_NEAR(back.xi[k], st.xi[k], 1e-13);
}
