#include "bilayer/fullplane.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bilayer {

namespace {

constexpr double kLn2 = std::numbers::ln2;

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Least squares for y ~ X b with a handful of columns (normal equations).
std::vector<double> lsq(const std::vector<std::vector<double>>& X, const std::vector<double>& y, double& r2)
{
    const std::size_t m = X.front().size();
    std::vector<double> A(m * m, 0.0), b(m, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t a = 0; a < m; ++a) {
            b[a] += X[i][a] * y[i];
            for (std::size_t c = 0; c < m; ++c)
                A[a * m + c] += X[i][a] * X[i][c];
        }
    // Gaussian elimination with partial pivoting
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(A[r * m + col]) > std::abs(A[piv * m + col]))
                piv = r;
        for (std::size_t c = 0; c < m; ++c)
            std::swap(A[col * m + c], A[piv * m + c]);
        std::swap(b[col], b[piv]);
        if (A[col * m + col] == 0.0)
            throw std::invalid_argument("decay fit: singular design");
        for (std::size_t r = col + 1; r < m; ++r) {
            const double f = A[r * m + col] / A[col * m + col];
            for (std::size_t c = col; c < m; ++c)
                A[r * m + c] -= f * A[col * m + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(m);
    for (std::size_t r = m; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < m; ++c)
            s -= A[r * m + c] * x[c];
        x[r] = s / A[r * m + r];
    }
    double mean = 0.0;
    for (double v : y)
        mean += v;
    mean /= static_cast<double>(y.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double pred = 0.0;
        for (std::size_t a = 0; a < m; ++a)
            pred += X[i][a] * x[a];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return x;
}

ScalarField shifted(const ScalarField& f)
{
    ScalarField s(f.grid);
    for (std::size_t k = 0; k < f.size(); ++k)
        s[k] = f[k] + kLn2;
    return s;
}

double q_ratio(double s)
{
    const double a = std::abs(s);
    if (a == 0.0)
        return 1.0;
    return std::abs(std::expm1(s)) / std::max(a, 1e-300);
}

/// Warm start on a new grid: bilinear from the old fields inside the old disk
/// (one cell in from its edge), -ln2 elsewhere.
std::pair<ScalarField, ScalarField> pad(const ScalarField& u, const ScalarField& v, const GridPtr& to)
{
    const Grid& og = *u.grid;
    const double Rin = og.disk_radius() - og.h1();
    ScalarField nu(to, -kLn2), nv(to, -kLn2);
    for (std::size_t k = 0; k < to->size(); ++k) {
        if (!to->unknown(k))
            continue;
        const Point x = to->node(k);
        if (x.x * x.x + x.y * x.y < Rin * Rin) {
            nu[k] = interpolate(u, x);
            nv[k] = interpolate(v, x);
        }
    }
    return {nu, nv};
}

} // namespace

ContinuationSchedule ContinuationSchedule::defaults(double h, int levels)
{
    if (!(h > 0) || levels < 1)
        throw std::invalid_argument("schedule needs h > 0 and at least one level");
    ContinuationSchedule s;
    for (int k = 0; k < levels; ++k)
        s.epsilons.push_back(4.0 * h * h * std::ldexp(1.0, -k));
    s.radii = {4.0, 6.0, 8.0, 12.0};
    return s;
}

void ContinuationSchedule::validate(double R0) const
{
    if (epsilons.empty() || radii.empty())
        throw std::invalid_argument("schedule lists must be nonempty");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0))
            throw std::invalid_argument("schedule epsilons must be positive");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
            throw std::invalid_argument("schedule epsilons must decrease strictly");
    }
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > R0))
            throw std::invalid_argument("schedule radius " + std::to_string(radii[i]) +
                                        " does not exceed the vortex radius " + std::to_string(R0));
        if (i > 0 && !(radii[i] > radii[i - 1]))
            throw std::invalid_argument("schedule radii must increase strictly");
    }
}

double vortex_radius(const VortexConfiguration& vortices)
{
    double r = 0.0;
    for (const auto* list : {&vortices.upper, &vortices.lower})
        for (const Point& p : *list)
            r = std::max(r, std::hypot(p.x, p.y));
    return r;
}

ScalarField single_equation_solve(const std::vector<Point>& points, const GridPtr& grid,
                                  const std::vector<double>& epsilons, const NewtonSettings& settings)
{
    if (grid->is_periodic())
        throw std::invalid_argument("single_equation_solve needs a Dirichlet grid");
    if (epsilons.empty())
        throw std::invalid_argument("single_equation_solve needs at least one epsilon");
    const double R = grid->disk_radius() > 0 ? grid->disk_radius()
                                             : 0.5 * std::min(grid->length_x(), grid->length_y());
    for (const Point& p : points)
        if (std::hypot(p.x, p.y) >= R - 1.0)
            throw std::invalid_argument("vortex points must lie inside the disk of radius R - 1");
    if (points.empty())
        return ScalarField(grid);

    VortexConfiguration vc{points, {}};
    SpectralSolver spec(grid);
    ScalarField u(grid);
    bool first = true;
    for (double eps : epsilons) {
        RegularizedBackground bg = regularized_background(vc, eps, grid);
        const auto& f0 = bg.f0.values;
        const auto& h = bg.h1.values;
        LocalNonlinearity F = [&](std::size_t k, double w, double& f, double& df) {
            const double e = std::exp(f0[k] + w);
            f = 8.0 * e - 8.0 + h[k];
            df = 8.0 * e;
        };
        ScalarField w(grid);
        if (!first)
            for (std::size_t k = 0; k < w.size(); ++k)
                if (grid->unknown(k))
                    w[k] = u[k] - f0[k];
        ScalarField sol = semilinear_newton(F, w, settings, nullptr, &spec);
        for (std::size_t k = 0; k < u.size(); ++k)
            u[k] = grid->unknown(k) ? f0[k] + sol[k] : 0.0;
        first = false;
    }
    return u;
}

double lambda_estimate(const ScalarField& u, int Nplus)
{
    ScalarField f(u.grid);
    for (std::size_t k = 0; k < u.size(); ++k)
        f[k] = -std::expm1(u[k]);
    return 4.0 / std::numbers::pi * integrate(f) - 2.0 * Nplus;
}

double circle_max_abs(const ScalarField& f, double r, int angles)
{
    double m = 0.0;
    for (int a = 0; a < angles; ++a) {
        const double th = 2.0 * std::numbers::pi * a / angles;
        m = std::max(m, std::abs(interpolate(f, {r * std::cos(th), r * std::sin(th)})));
    }
    return m;
}

ContinuationResult domain_continuation(const CouplingParams& params, const VortexConfiguration& vortices,
                                       const ContinuationSchedule& schedule, const ContinuationSettings& settings)
{
    const CouplingMatrix K = build_coupling(params);
    const Regime regime = classify_regime(K);
    if (regime == Regime::IndefiniteB)
        throw SolverError(SolverErrorKind::RegimeRejected,
                          "full-plane solutions are only constructed for -4 <= detK < 0; nothing is claimed "
                          "when detK < -4");
    require_indefinite(K);
    schedule.validate(vortex_radius(vortices));
    if (!(settings.h > 0))
        throw std::invalid_argument("continuation spacing must be positive");
    for (double R : schedule.radii)
        if (vortex_radius(vortices) >= R - 1.0)
            throw std::invalid_argument("vortex points must lie inside the disk of radius R - 1");

    ContinuationResult out;
    ScalarField pu, pv;
    for (double R : schedule.radii) {
        const int n = static_cast<int>(std::lround(2.0 * R / settings.h)) + 1;
        GridPtr grid = Grid::disk(R, n);
        for (double eps : schedule.epsilons) {
            const auto t0 = std::chrono::steady_clock::now();
            auto problem = std::make_shared<BoundedProblem>(K, regularized_background(vortices, eps, grid));
            VariationalState init = zero_state(*problem);
            if (!pu.values.empty()) {
                if (pu.grid.get() == grid.get()) {
                    init = state_from_uv(pu, pv, *problem);
                } else {
                    auto [a, b] = pad(pu, pv, grid);
                    init = state_from_uv(a, b, *problem);
                }
            }
            SolveReport rep;
            VariationalState st = nested_minimize(*problem, init, settings.outer, rep);
            auto [u, v] = recover_uv(st, *problem);

            StageRecord rec;
            rec.R = R;
            rec.epsilon = eps;
            rec.nodes = n;
            rec.converged = rep.converged;
            rec.iterations = rep.iterations;
            rec.I = rep.final.I;
            rec.residual = std::max(rep.final.residual_inner, rep.final.residual_outer);
            const ScalarField su = shifted(u), sv = shifted(v);
            rec.indicator = std::max(circle_max_abs(su, R - 1.0, 256), circle_max_abs(sv, R - 1.0, 256));
            rec.max_shifted = -INFINITY;
            for (std::size_t k = 0; k < u.size(); ++k)
                if (grid->unknown(k))
                    rec.max_shifted = std::max({rec.max_shifted, su[k], sv[k]});
            rec.seconds = seconds_since(t0);
            out.stages.push_back(rec);
            if (settings.observer)
                settings.observer(rec, u, v, *problem);

            pu = std::move(u);
            pv = std::move(v);
            out.report = std::move(rep);
            out.problem = problem;
        }
    }
    out.u = std::move(pu);
    out.v = std::move(pv);
    return out;
}

std::vector<std::pair<double, double>> phi_profile(const ScalarField& u, const ScalarField& v,
                                                   const CouplingMatrix& K, const std::vector<double>& radii,
                                                   int angles)
{
    if (angles < 64)
        throw std::invalid_argument("phi_profile needs at least 64 angles");
    require_same_grid(u, v);
    std::vector<std::pair<double, double>> out;
    out.reserve(radii.size());
    for (double r : radii) {
        double m = INFINITY;
        for (int a = 0; a < angles; ++a) {
            const double th = 2.0 * std::numbers::pi * a / angles;
            const Point x{r * std::cos(th), r * std::sin(th)};
            const double us = interpolate(u, x) + kLn2, vs = interpolate(v, x) + kLn2;
            m = std::min(m, 0.5 * K.k12 * q_ratio(vs) + 0.5 * K.k11 * q_ratio(us));
        }
        out.emplace_back(r, 4.0 * m);
    }
    return out;
}

BellmanSolution bellman_ode_solve(const std::vector<std::pair<double, double>>& phi, double t0, double T,
                                  double alpha0, double lambda, int intervals)
{
    if (!(t0 > 0) || !(T > t0 + 1.0) || intervals < 10)
        throw std::invalid_argument("bellman_ode_solve needs 0 < t0 < T - 1 and at least 10 intervals");
    if (phi.empty())
        throw std::invalid_argument("bellman_ode_solve needs a nonempty profile");
    double tail = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (!std::isfinite(phi[i].first) || !std::isfinite(phi[i].second))
            throw std::invalid_argument("singular profile: nonfinite entry");
        if (i > 0) {
            if (!(phi[i].first > phi[i - 1].first))
                throw std::invalid_argument("profile radii must increase");
            tail += 0.5 * (std::abs(phi[i].second) + std::abs(phi[i - 1].second)) * (phi[i].first - phi[i - 1].first);
        }
    }
    if (!std::isfinite(tail))
        throw std::invalid_argument("singular profile: tail integral diverges");
    auto phi_at = [&](double t) {
        if (t <= phi.front().first)
            return phi.front().second;
        if (t >= phi.back().first)
            return phi.back().second;
        auto it = std::upper_bound(phi.begin(), phi.end(), t,
                                   [](double a, const std::pair<double, double>& p) { return a < p.first; });
        const auto& [t1, p1] = *(it - 1);
        const auto& [t2, p2] = *it;
        return p1 + (p2 - p1) * (t - t1) / (t2 - t1);
    };

    const int m = intervals;
    const double dt = (T - t0) / m;
    BellmanSolution s;
    s.t.resize(m + 1);
    s.w.assign(m + 1, 0.0);
    for (int i = 0; i <= m; ++i)
        s.t[i] = t0 + i * dt;
    s.w[0] = alpha0;
    // interior unknowns 1..m-1: tridiagonal (Thomas)
    const int n = m - 1;
    std::vector<double> a(n), b(n), c(n), d(n, 0.0);
    for (int i = 1; i <= m - 1; ++i) {
        const double t = s.t[i];
        a[i - 1] = 1.0 / (dt * dt) - 1.0 / (2.0 * t * dt);
        b[i - 1] = -2.0 / (dt * dt) - (lambda + phi_at(t));
        c[i - 1] = 1.0 / (dt * dt) + 1.0 / (2.0 * t * dt);
    }
    d[0] = -a[0] * alpha0;
    for (int i = 1; i < n; ++i) {
        const double f = a[i] / b[i - 1];
        b[i] -= f * c[i - 1];
        d[i] -= f * d[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (int i = n - 2; i >= 0; --i)
        x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    for (int i = 1; i <= m - 1; ++i)
        s.w[i] = x[i - 1];

    s.ratio_min = INFINITY;
    s.ratio_max = -INFINITY;
    for (int i = 0; i <= m; ++i) {
        if (s.t[i] > T - 1.0 + 1e-12)
            break;
        const double W0 = std::exp(-2.0 * s.t[i]) / std::sqrt(s.t[i]);
        const double r = s.w[i] / W0;
        s.ratio_min = std::min(s.ratio_min, r);
        s.ratio_max = std::max(s.ratio_max, r);
    }
    return s;
}

DecayFit decay_fit(const ScalarField& u, const ScalarField& v, double r_min, double r_max, int samples)
{
    require_same_grid(u, v);
    const Grid& g = *u.grid;
    if (samples < 10)
        throw std::invalid_argument("decay fit needs at least 10 sample radii");
    const double edge = g.disk_radius() > 0 ? g.disk_radius() : 0.5 * std::min(g.length_x(), g.length_y());
    if (!(r_min > 0) || !(r_max > r_min) || r_max > edge - 2.0 * std::max(g.h1(), g.h2()))
        throw std::invalid_argument("decay fit window outside the resolved region");

    const ScalarField su = shifted(u), sv = shifted(v);
    // central-difference gradient magnitude of the larger shifted field
    ScalarField grad(u.grid);
    for (int j = 1; j + 1 < g.n2(); ++j)
        for (int i = 1; i + 1 < g.n1(); ++i) {
            double best = 0.0;
            for (const ScalarField* f : {&su, &sv}) {
                const double gx = ((*f)[g.index(i + 1, j)] - (*f)[g.index(i - 1, j)]) / (2.0 * g.h1());
                const double gy = ((*f)[g.index(i, j + 1)] - (*f)[g.index(i, j - 1)]) / (2.0 * g.h2());
                best = std::max(best, std::hypot(gx, gy));
            }
            grad[g.index(i, j)] = best;
        }

    std::vector<std::vector<double>> X2, X3;
    std::vector<double> y, yfix, ygrad;
    for (int s = 0; s < samples; ++s) {
        const double r = r_min + (r_max - r_min) * s / (samples - 1);
        const double m = std::max(circle_max_abs(su, r), circle_max_abs(sv, r));
        const double gm = circle_max_abs(grad, r);
        if (!(m > 0) || !(gm > 0))
            throw std::invalid_argument("decay fit: field vanishes on the window");
        X2.push_back({1.0, -r});
        X3.push_back({1.0, -r, std::log(r)});
        y.push_back(std::log(m));
        yfix.push_back(std::log(m) + 0.5 * std::log(r));
        ygrad.push_back(std::log(gm) + 0.5 * std::log(r));
    }
    DecayFit fit;
    fit.r_min = r_min;
    fit.r_max = r_max;
    fit.samples = samples;
    double r2 = 0.0;
    auto b = lsq(X2, yfix, r2);
    fit.C = std::exp(b[0]);
    fit.rate = b[1];
    // r^2 of the fixed-power model measured on ln m, comparable with the pure exponential
    {
        double mean = 0.0;
        for (double t : y)
            mean += t;
        mean /= static_cast<double>(y.size());
        double ss_tot = 0.0, ss_res = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double r = -X2[i][1];
            const double pred = b[0] - b[1] * r - 0.5 * std::log(r);
            ss_res += (y[i] - pred) * (y[i] - pred);
            ss_tot += (y[i] - mean) * (y[i] - mean);
        }
        fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    }
    auto e = lsq(X2, y, fit.r2_exponential);
    fit.rate_exponential = e[1];
    auto f = lsq(X3, y, r2);
    fit.free_rate = f[1];
    fit.free_power = f[2];
    auto gr = lsq(X2, ygrad, fit.gradient_r2);
    fit.gradient_rate = gr[1];
    return fit;
}

SandwichReport sandwich_check(const ScalarField& u, const ScalarField& v, const BoundedProblem& problem,
                              const MonotoneSettings& settings)
{
    require_same_grid(u, v);
    const GridPtr& gp = problem.grid();
    const Grid& g = *gp;
    const auto& bg = problem.background();
    Vec lf(g.size()), lg(g.size());
    laplacian_apply(g, bg.f0.data(), lf.data());
    laplacian_apply(g, bg.g0.data(), lg.data());
    WEquation eq;
    eq.a = 8.0;
    eq.b = 4.0;
    eq.sources = ScalarField(gp);
    eq.boundary = ScalarField(gp, -kLn2);
    ScalarField sub(gp, -kLn2), negative(gp);
    double min_source = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.unknown(k))
            continue;
        eq.sources[k] = 0.5 * ((lf[k] + bg.h1[k]) + (lg[k] + bg.h2[k]));
        negative[k] = std::min(eq.sources[k], 0.0);
        min_source = std::min(min_source, eq.sources[k]);
        sub[k] = 0.5 * (u[k] + v[k]);
    }
    ScalarField super(gp, -kLn2);
    if (min_source < 0.0) {
        const ScalarField z = poisson_solve_dirichlet(negative, ScalarField(gp));
        for (std::size_t k = 0; k < g.size(); ++k)
            if (g.unknown(k))
                super[k] += std::max(z[k], 0.0);
    }
    SandwichReport rep;
    rep.min_source = min_source;
    rep.max_super_shifted = -INFINITY;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.unknown(k))
            rep.max_super_shifted = std::max(rep.max_super_shifted, super[k] + kLn2);
    rep.w = monotone_iteration(sub, super, eq, settings, &rep.monotone);
    rep.max_w_shifted = -INFINITY;
    rep.min_gap = INFINITY;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.unknown(k))
            continue;
        rep.max_w_shifted = std::max(rep.max_w_shifted, rep.w[k] + kLn2);
        rep.min_gap = std::min(rep.min_gap, rep.w[k] - sub[k]);
    }
    return rep;
}

} // namespace bilayer
