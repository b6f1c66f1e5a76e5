#include "bilayer/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bilayer/fullplane.hpp"

namespace bilayer {

double quadrature(const ScalarField& f, const Region& region)
{
    const Grid& g = *f.grid;
    if (g.is_periodic() && region.kind != Region::Kind::All)
        throw std::invalid_argument("periodic grids only support the whole-domain region");
    if (region.kind != Region::Kind::All && !(region.r2 > region.r1 && region.r1 >= 0))
        throw std::invalid_argument("region radii must satisfy 0 <= r1 < r2");
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!g.unknown(k))
            continue;
        if (region.kind != Region::Kind::All) {
            const Point x = g.node(k);
            const double r = std::hypot(x.x, x.y);
            if (r >= region.r2 || (region.kind == Region::Kind::Annulus && r < region.r1))
                continue;
        }
        s += f[k];
        ++count;
    }
    if (count == 0)
        throw std::invalid_argument("quadrature region contains no nodes");
    return s * g.cell_area();
}

IdentityReport make_identity(std::string name, double predicted, double measured, double tolerance)
{
    IdentityReport r;
    r.name = std::move(name);
    r.predicted = predicted;
    r.measured = measured;
    r.tolerance = tolerance;
    r.rel_error = predicted == 0.0 ? std::abs(measured) : std::abs(measured - predicted) / std::abs(predicted);
    r.pass = r.rel_error <= tolerance;
    return r;
}

std::vector<IdentityReport> torus_identities(const ScalarField& u, const ScalarField& v,
                                             const CouplingParams& params, const VortexConfiguration& vortices,
                                             double rel_tol)
{
    require_same_grid(u, v);
    const Grid& g = *u.grid;
    if (!g.is_periodic())
        throw std::invalid_argument("torus_identities needs a periodic grid");
    const CouplingMatrix K = build_coupling(params);
    const double area = g.length_x() * g.length_y();
    const AlphaBeta ab = alpha_beta(area, params, vortices);
    ScalarField eu(u.grid), ev(u.grid), m1(u.grid), m2(u.grid);
    for (std::size_t k = 0; k < u.size(); ++k) {
        eu[k] = std::exp(u[k]);
        ev[k] = std::exp(v[k]);
        m1[k] = K.k11 * eu[k] + K.k12 * ev[k];
        m2[k] = K.k12 * eu[k] + K.k11 * ev[k];
    }
    const double pi = std::numbers::pi;
    return {
        make_identity("upper_flux", area - pi * vortices.N1(), quadrature(m1), rel_tol),
        make_identity("lower_flux", area - pi * vortices.N2(), quadrature(m2), rel_tol),
        make_identity("alpha_constraint", ab.alpha, quadrature(eu), rel_tol),
        make_identity("beta_constraint", ab.beta, quadrature(ev), rel_tol),
    };
}

std::vector<IdentityReport> fullplane_identities(const ScalarField& u, const ScalarField& v,
                                                 const CouplingParams& params, const VortexConfiguration& vortices,
                                                 double rel_tol, double abs_tol)
{
    require_same_grid(u, v);
    const Grid& g = *u.grid;
    if (g.is_periodic())
        throw std::invalid_argument("fullplane_identities needs a Dirichlet grid");
    const ChargeObservables pred = predicted_charges(params, vortices);
    ScalarField flux(u.grid), charge(u.grid);
    for (std::size_t k = 0; k < u.size(); ++k) {
        flux[k] = 2.0 - 2.0 * std::exp(u[k]) - 2.0 * std::exp(v[k]);
        charge[k] = std::exp(u[k]) - std::exp(v[k]);
    }
    const double R = g.disk_radius() > 0 ? g.disk_radius() : 0.5 * std::min(g.length_x(), g.length_y());
    ScalarField su(u.grid), sv(u.grid);
    for (std::size_t k = 0; k < u.size(); ++k) {
        su[k] = u[k] + std::numbers::ln2;
        sv[k] = v[k] + std::numbers::ln2;
    }
    const double b = std::max(circle_max_abs(su, R - 1.0, 256), circle_max_abs(sv, R - 1.0, 256));
    // integral of b e^{-2(r - R + 1)} over r > R - 1
    const double tail = std::numbers::pi * (R - 1.0) * b;

    const double pi = std::numbers::pi;
    auto r1 = make_identity("flux", pi * vortices.Nplus(), quadrature(flux), rel_tol);
    const double qt = pred.Qtilde;
    auto r2 = make_identity("pseudospin_charge", qt, quadrature(charge), qt == 0.0 ? abs_tol : rel_tol);
    r1.tail = tail;
    r2.tail = tail;
    return {r1, r2};
}

TorusSolve solve_torus(const CouplingParams& params, const VortexConfiguration& vortices, double tau1, double tau2,
                       int n1, int n2, const OuterSettings& settings, double epsilon)
{
    const CouplingMatrix K = build_coupling(params);
    require_indefinite(K);
    const double area = tau1 * tau2;
    TorusSolve out;
    out.ab = alpha_beta(area, params, vortices);
    if (!out.ab.feasible)
        throw SolverError(SolverErrorKind::Infeasible,
                          "area " + std::to_string(area) + " is not above the threshold " +
                              std::to_string(threshold_area(params, vortices)));
    GridPtr grid = Grid::periodic(tau1, tau2, n1, n2);
    const double eps = epsilon > 0 ? epsilon : default_epsilon(*grid);
    out.problem = std::make_shared<TorusProblem>(K, torus_background(vortices, grid, eps), area, vortices.Nplus(),
                                                 vortices.Nminus(), out.ab.alpha, out.ab.beta);
    out.state = nested_minimize(*out.problem, zero_state(*out.problem), settings, out.report);
    auto [u, v] = recover_uv(out.state, *out.problem);
    out.u = std::move(u);
    out.v = std::move(v);
    return out;
}

std::vector<SweepRow> threshold_sweep(const CouplingParams& params, const VortexConfiguration& fractional,
                                      const std::vector<double>& areas, const SweepSettings& settings)
{
    const double thr = threshold_area(params, fractional);
    std::vector<SweepRow> rows;
    for (double area : areas) {
        SweepRow row;
        row.area = area;
        row.factor = area / thr;
        const AlphaBeta ab = alpha_beta(area, params, fractional);
        row.alpha = ab.alpha;
        row.beta = ab.beta;
        row.feasible = ab.feasible;
        if (!ab.feasible) {
            row.status = "infeasible";
            rows.push_back(row);
            continue;
        }
        const double t1 = std::sqrt(area / settings.aspect), t2 = area / t1;
        VortexConfiguration vc = fractional;
        for (auto* list : {&vc.upper, &vc.lower})
            for (Point& p : *list)
                p = {p.x * t1, p.y * t2};
        try {
            TorusSolve ts = solve_torus(params, vc, t1, t2, settings.n, settings.n, settings.outer);
            row.converged = ts.report.converged;
            row.status = ts.report.status;
            row.iterations = ts.report.iterations;
            row.residual = std::max(ts.report.final.residual_inner, ts.report.final.residual_outer);
            ScalarField eu(ts.u.grid), ev(ts.u.grid);
            for (std::size_t k = 0; k < eu.size(); ++k) {
                eu[k] = std::exp(ts.u[k]);
                ev[k] = std::exp(ts.v[k]);
            }
            row.constraint_error_u = std::abs(quadrature(eu) - ab.alpha) / ab.alpha;
            row.constraint_error_v = std::abs(quadrature(ev) - ab.beta) / ab.beta;
        } catch (const SolverError& e) {
            row.status = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

IdentityReport max_principle_check(const ScalarField& u, const ScalarField& v)
{
    require_same_grid(u, v);
    const Grid& g = *u.grid;
    double m = -INFINITY;
    for (std::size_t k = 0; k < u.size(); ++k)
        if (g.unknown(k))
            m = std::max({m, u[k], v[k]});
    IdentityReport r;
    r.name = "max_principle";
    r.predicted = -std::numbers::ln2;
    r.measured = m;
    r.rel_error = m + std::numbers::ln2; // signed margin; must be negative
    r.tolerance = 0.0;
    r.pass = m < -std::numbers::ln2;
    return r;
}

} // namespace bilayer
