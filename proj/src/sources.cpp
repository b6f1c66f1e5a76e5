#include "bilayer/sources.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bilayer/elliptic.hpp"

namespace bilayer {

namespace {

void require_eps(double eps)
{
    if (!(eps > 0))
        throw std::invalid_argument("epsilon must be positive");
}

double log_ratio_sum(const std::vector<Point>& pts, double eps, Point x)
{
    double s = 0.0;
    for (const Point& p : pts) {
        const double dx = x.x - p.x, dy = x.y - p.y;
        const double r2 = dx * dx + dy * dy;
        s += std::log((eps + r2) / (1.0 + r2));
    }
    return s;
}

double h_sum(const std::vector<Point>& pts, Point x)
{
    double s = 0.0;
    for (const Point& p : pts) {
        const double dx = x.x - p.x, dy = x.y - p.y;
        const double d = 1.0 + dx * dx + dy * dy;
        s += 4.0 / (d * d);
    }
    return s;
}

} // namespace

ScalarField regularized_delta_sum(const std::vector<Point>& points, double epsilon, const GridPtr& grid)
{
    require_eps(epsilon);
    ScalarField f(grid);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Point x = grid->node(k);
        double s = 0.0;
        for (const Point& p : points) {
            const double dx = x.x - p.x, dy = x.y - p.y;
            const double d = epsilon + dx * dx + dy * dy;
            s += 4.0 * epsilon / (d * d);
        }
        f[k] = s;
    }
    return f;
}

BackgroundFields background_fields(const VortexConfiguration& vortices, double epsilon, const GridPtr& grid)
{
    require_eps(epsilon);
    BackgroundFields b{ScalarField(grid), ScalarField(grid), ScalarField(grid), ScalarField(grid)};
    for (std::size_t k = 0; k < grid->size(); ++k) {
        const Point x = grid->node(k);
        b.u0eps[k] = log_ratio_sum(vortices.upper, epsilon, x);
        b.v0eps[k] = log_ratio_sum(vortices.lower, epsilon, x);
        b.h1[k] = h_sum(vortices.upper, x);
        b.h2[k] = h_sum(vortices.lower, x);
    }
    return b;
}

ScalarField harmonic_correction(const ScalarField& boundary_data, double tol)
{
    if (boundary_data.grid->is_periodic())
        throw std::invalid_argument("harmonic_correction needs a Dirichlet grid");
    ScalarField zero(boundary_data.grid);
    return poisson_solve_dirichlet(zero, boundary_data, tol);
}

RegularizedBackground regularized_background(const VortexConfiguration& vortices, double epsilon,
                                             const GridPtr& grid, double tol)
{
    if (grid->is_periodic())
        throw std::invalid_argument("regularized_background needs a Dirichlet grid; use torus_background");
    BackgroundFields b = background_fields(vortices, epsilon, grid);
    RegularizedBackground rb;
    rb.epsilon = epsilon;
    ScalarField mu(grid), mv(grid);
    for (std::size_t k = 0; k < grid->size(); ++k) {
        mu[k] = -b.u0eps[k];
        mv[k] = -b.v0eps[k];
    }
    rb.U0eps = harmonic_correction(mu, tol);
    rb.V0eps = harmonic_correction(mv, tol);
    rb.f0 = ScalarField(grid);
    rb.g0 = ScalarField(grid);
    for (std::size_t k = 0; k < grid->size(); ++k) {
        // exactly zero on pinned nodes
        rb.f0[k] = grid->unknown(k) ? b.u0eps[k] + rb.U0eps[k] : 0.0;
        rb.g0[k] = grid->unknown(k) ? b.v0eps[k] + rb.V0eps[k] : 0.0;
    }
    rb.u0eps = std::move(b.u0eps);
    rb.v0eps = std::move(b.v0eps);
    rb.h1 = std::move(b.h1);
    rb.h2 = std::move(b.h2);
    return rb;
}

ScalarField periodic_delta_sum(const std::vector<Point>& points, double epsilon, const GridPtr& grid)
{
    require_eps(epsilon);
    const Grid& g = *grid;
    if (!g.is_periodic())
        throw std::invalid_argument("periodic_delta_sum needs a periodic grid");
    const double t1 = g.length_x(), t2 = g.length_y();
    ScalarField f(grid);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Point x = g.node(k);
        double s = 0.0;
        for (const Point& p : points)
            for (int a = -1; a <= 1; ++a)
                for (int b = -1; b <= 1; ++b) {
                    const double dx = x.x - p.x - a * t1, dy = x.y - p.y - b * t2;
                    const double d = epsilon + dx * dx + dy * dy;
                    s += 4.0 * epsilon / (d * d);
                }
        f[k] = s;
    }
    return f;
}

namespace {

ScalarField balanced_potential(const std::vector<Point>& pts, const GridPtr& grid, double eps, double& mean_out)
{
    ScalarField src = periodic_delta_sum(pts, eps, grid);
    double mean = 0.0;
    for (double v : src.values)
        mean += v;
    mean /= static_cast<double>(src.size());
    mean_out = mean;
    for (double& v : src.values)
        v -= mean;
    double resid = 0.0;
    for (double v : src.values)
        resid += v;
    resid /= static_cast<double>(src.size());
    if (std::abs(resid) > 1e-10)
        throw SolverError(SolverErrorKind::NonZeroMean, "torus source mean after balancing is " + std::to_string(resid));
    if (pts.empty())
        return ScalarField(grid);
    ScalarField u0 = poisson_solve_periodic(src);
    double m = 0.0;
    for (double v : u0.values)
        m += v;
    m /= static_cast<double>(u0.size());
    for (double& v : u0.values)
        v -= m;
    return u0;
}

} // namespace

TorusBackground torus_background(const VortexConfiguration& vortices, const GridPtr& grid, double epsilon)
{
    require_eps(epsilon);
    for (const Point& p : vortices.upper)
        if (!grid->contains(p))
            throw std::invalid_argument("upper vortex outside the fundamental cell");
    for (const Point& p : vortices.lower)
        if (!grid->contains(p))
            throw std::invalid_argument("lower vortex outside the fundamental cell");
    TorusBackground tb;
    tb.epsilon = epsilon;
    tb.u0 = balanced_potential(vortices.upper, grid, epsilon, tb.bump_mean_u);
    tb.v0 = balanced_potential(vortices.lower, grid, epsilon, tb.bump_mean_v);
    return tb;
}

double default_epsilon(const Grid& grid)
{
    const double h = std::max(grid.h1(), grid.h2());
    return 4.0 * h * h;
}

} // namespace bilayer
