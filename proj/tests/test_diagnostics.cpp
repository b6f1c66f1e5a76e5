#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bilayer/diagnostics.hpp"

using namespace bilayer;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(Quadrature, GaussianIntegral)
{
    auto g = Grid::rectangle(16.0, 16.0, 161, 161);
    ScalarField f(g);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Point p = g->node(k);
        f[k] = std::exp(-(p.x * p.x + p.y * p.y));
    }
    EXPECT_NEAR(quadrature(f), pi, 1e-6);
}

TEST(Quadrature, AnnulusArea)
{
    auto g = Grid::rectangle(12.0, 12.0, 601, 601);
    ScalarField one(g, 1.0);
    EXPECT_NEAR(quadrature(one, Region::annulus(2.0, 4.0)), pi * (16 - 4), 0.05);
    EXPECT_NEAR(quadrature(one, Region::disk(3.0)), 9 * pi, 0.05);
    EXPECT_THROW(quadrature(one, Region::annulus(2.0, 2.0)), std::invalid_argument);
    auto t = Grid::periodic(1.0, 1.0, 8, 8);
    EXPECT_THROW(quadrature(ScalarField(t, 1.0), Region::disk(0.3)), std::invalid_argument);
}

TEST(Identity, PassSemantics)
{
    IdentityReport a = make_identity("x", 2.0, 2.018, 0.01);
    EXPECT_NEAR(a.rel_error, 0.009, 1e-12);
    EXPECT_TRUE(a.pass);
    IdentityReport b = make_identity("y", 2.0, 2.05, 0.01);
    EXPECT_FALSE(b.pass);
    // absolute error when the prediction is zero
    IdentityReport c = make_identity("z", 0.0, 3e-9, 1e-8);
    EXPECT_DOUBLE_EQ(c.rel_error, 3e-9);
    EXPECT_TRUE(c.pass);
}

TEST(Sweep, FeasibilityFlipsAtThreshold)
{
    const CouplingParams params{1.0, -1.0};
    VortexConfiguration frac{{{0.25, 0.25}}, {}};
    const double thr = threshold_area(params, frac);
    EXPECT_DOUBLE_EQ(thr, pi);
    std::vector<double> areas;
    for (double f : {0.9, 0.99, 1.01, 1.1})
        areas.push_back(f * thr);
    SweepSettings s;
    s.n = 32;
    auto rows = threshold_sweep(params, frac, areas, s);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_FALSE(rows[0].feasible);
    EXPECT_FALSE(rows[1].feasible);
    EXPECT_EQ(rows[0].status, "infeasible");
    EXPECT_TRUE(rows[2].feasible);
    EXPECT_TRUE(rows[3].feasible);
    for (int i : {2, 3}) {
        EXPECT_TRUE(rows[i].converged) << rows[i].status;
        EXPECT_LE(rows[i].residual, 1e-8);
        EXPECT_LT(rows[i].constraint_error_u, 1e-6);
    }
}

TEST(MaxPrinciple, StrictInequality)
{
    auto g = Grid::disk(3.0, 17);
    ScalarField u(g, -1.0), v(g, -1.0);
    EXPECT_TRUE(max_principle_check(u, v).pass);
    v[g->index(8, 8)] = -std::numbers::ln2;
    EXPECT_FALSE(max_principle_check(u, v).pass);
}

TEST(Torus, IdentitiesOfConvergedSolve)
{
    const CouplingParams params{1.0, -0.5};
    VortexConfiguration vc{{{1.0, 2.0}}, {}};
    TorusSolve ts = solve_torus(params, vc, 2 * pi, 2 * pi, 64, 64, OuterSettings{});
    ASSERT_TRUE(ts.report.converged);
    auto ids = torus_identities(ts.u, ts.v, params, vc);
    ASSERT_EQ(ids.size(), 4u);
    for (const auto& id : ids)
        EXPECT_TRUE(id.pass) << id.name << " rel " << id.rel_error;
}
