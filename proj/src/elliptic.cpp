#include "bilayer/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bilayer {

void laplacian_apply(const Grid& g, const double* in, double* out)
{
    const int n1 = g.n1(), n2 = g.n2();
    const double a = 1.0 / (g.h1() * g.h1()), b = 1.0 / (g.h2() * g.h2());
    if (g.is_periodic()) {
        for (int j = 0; j < n2; ++j) {
            const int jm = j == 0 ? n2 - 1 : j - 1, jp = j == n2 - 1 ? 0 : j + 1;
            for (int i = 0; i < n1; ++i) {
                const int im = i == 0 ? n1 - 1 : i - 1, ip = i == n1 - 1 ? 0 : i + 1;
                const double c = in[g.index(i, j)];
                out[g.index(i, j)] = a * ((in[g.index(ip, j)] + in[g.index(im, j)]) - 2.0 * c) +
                                     b * ((in[g.index(i, jp)] + in[g.index(i, jm)]) - 2.0 * c);
            }
        }
        return;
    }
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i) {
            const std::size_t k = g.index(i, j);
            if (!g.unknown(k)) {
                out[k] = 0.0;
                continue;
            }
            const double c = in[k];
            out[k] = a * ((in[k + 1] + in[k - 1]) - 2.0 * c) + b * ((in[k + n1] + in[k - n1]) - 2.0 * c);
        }
}

ScalarField laplacian_apply(const ScalarField& f)
{
    ScalarField out(f.grid);
    laplacian_apply(*f.grid, f.data(), out.data());
    return out;
}

ScalarField poisson_solve_periodic(const ScalarField& rhs)
{
    const Grid& g = *rhs.grid;
    if (!g.is_periodic())
        throw std::invalid_argument("poisson_solve_periodic needs a periodic grid");
    double mean = 0.0, amax = 0.0;
    for (double v : rhs.values) {
        mean += v;
        amax = std::max(amax, std::abs(v));
    }
    mean /= static_cast<double>(rhs.size());
    if (std::abs(mean) > 1e-10 * (1.0 + amax))
        throw SolverError(SolverErrorKind::NonZeroMean, "right-hand side has mean " + std::to_string(mean));
    SpectralSolver spec(rhs.grid);
    Vec neg(rhs.values.size());
    for (std::size_t k = 0; k < neg.size(); ++k)
        neg[k] = -rhs[k];
    ScalarField out(rhs.grid);
    spec.solve_shifted(neg, out.values, 0.0);
    return out;
}

KrylovResult solve_shifted_laplacian(SpectralSolver& spec, const Vec& sigma, const Vec& f, Vec& y,
                                     double rtol, double atol, int max_iter)
{
    const Grid& g = spec.grid();
    double cbar = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.unknown(k)) {
            cbar += sigma[k];
            ++cnt;
        }
    cbar /= static_cast<double>(cnt);
    Vec lap(g.size());
    LinOp A = [&](const Vec& in, Vec& out) {
        out.resize(in.size());
        laplacian_apply(g, in.data(), lap.data());
        for (std::size_t k = 0; k < in.size(); ++k)
            out[k] = g.unknown(k) ? sigma[k] * in[k] - lap[k] : 0.0;
    };
    LinOp M = [&](const Vec& in, Vec& out) { spec.solve_shifted(in, out, cbar); };
    return pcg(A, M, f, y, rtol, atol, max_iter);
}

ScalarField poisson_solve_dirichlet(const ScalarField& rhs, const ScalarField& boundary_values,
                                    double tol, int max_iter)
{
    require_same_grid(rhs, boundary_values);
    const Grid& g = *rhs.grid;
    if (g.is_periodic())
        throw std::invalid_argument("poisson_solve_dirichlet needs a Dirichlet grid");
    const std::size_t n = g.size();
    Vec lift(n, 0.0), lap(n), f(n, 0.0), sigma(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        if (!g.unknown(k))
            lift[k] = boundary_values[k];
    laplacian_apply(g, lift.data(), lap.data());
    for (std::size_t k = 0; k < n; ++k)
        if (g.unknown(k))
            f[k] = lap[k] - rhs[k];
    SpectralSolver spec(rhs.grid);
    Vec y(n, 0.0);
    ScalarField out(rhs.grid);
    int used = 0;
    for (int pass = 0; pass < 4; ++pass) {
        // tol on the 2-norm bounds the infinity norm; re-check the true residual
        KrylovResult kr = solve_shifted_laplacian(spec, sigma, f, y, 0.0, 0.5 * tol, max_iter - used);
        used += kr.iterations;
        for (std::size_t k = 0; k < n; ++k)
            out[k] = g.unknown(k) ? y[k] : lift[k];
        laplacian_apply(g, out.data(), lap.data());
        double rmax = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (g.unknown(k))
                rmax = std::max(rmax, std::abs(lap[k] - rhs[k]));
        if (rmax <= tol)
            return out;
        if (used >= max_iter)
            break;
    }
    throw SolverError(SolverErrorKind::MaxIterExceeded, "Dirichlet Poisson solve did not reach tolerance");
}

namespace {

double residual_into(const Grid& g, const LocalNonlinearity& F, const Vec& s, Vec& r, Vec* dF, Vec& lap)
{
    laplacian_apply(g, s.data(), lap.data());
    double rmax = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (!g.unknown(k)) {
            r[k] = 0.0;
            if (dF)
                (*dF)[k] = 0.0;
            continue;
        }
        double f = 0.0, df = 0.0;
        F(k, s[k], f, df);
        if (dF) {
            if (df < 0)
                throw std::logic_error("semilinear_newton: nonlinearity is not monotone");
            (*dF)[k] = df;
        }
        r[k] = lap[k] - f;
        if (!std::isfinite(r[k]))
            return INFINITY;
        rmax = std::max(rmax, std::abs(r[k]));
    }
    return rmax;
}

} // namespace

ScalarField semilinear_newton(const LocalNonlinearity& F, const ScalarField& initial,
                              const NewtonSettings& settings, NewtonReport* report, SpectralSolver* spectral)
{
    if (!(settings.tol_residual > 0) || settings.max_iter < 1)
        throw std::invalid_argument("NewtonSettings: tol > 0 and max_iter >= 1 required");
    const Grid& g = *initial.grid;
    std::unique_ptr<SpectralSolver> own;
    if (!spectral) {
        own = std::make_unique<SpectralSolver>(initial.grid);
        spectral = own.get();
    }
    const std::size_t n = g.size();
    Vec s = initial.values, r(n), dF(n), lap(n), delta(n), st(n), rt(n);
    NewtonReport rep;
    double rn = residual_into(g, F, s, r, &dF, lap);
    if (!std::isfinite(rn))
        throw SolverError(SolverErrorKind::DiagnosticOverflow, "nonfinite residual at the initial guess");
    for (int it = 0;; ++it) {
        rep.history.push_back(rn);
        rep.iterations = it;
        rep.residual = rn;
        if (rn <= settings.tol_residual)
            break;
        if (it >= settings.max_iter) {
            if (report)
                *report = rep;
            throw SolverError(SolverErrorKind::MaxIterExceeded,
                              "Newton residual " + std::to_string(rn) + " after " + std::to_string(it) + " steps");
        }
        std::fill(delta.begin(), delta.end(), 0.0);
        const double rtol = std::clamp(0.1 * rn, 1e-14, 1e-3);
        KrylovResult kr = solve_shifted_laplacian(*spectral, dF, r, delta, rtol, 0.0, 5000);
        rep.linear_iterations += kr.iterations;
        const double r2 = norm2(r);
        double t = 1.0;
        for (;;) {
            for (std::size_t k = 0; k < n; ++k)
                st[k] = s[k] + t * delta[k];
            double rtn = residual_into(g, F, st, rt, nullptr, lap);
            if (std::isfinite(rtn) && norm2(rt) <= (1.0 - 1e-4 * t) * r2)
                break;
            t *= 0.5;
            if (t < settings.min_step) {
                if (report)
                    *report = rep;
                throw SolverError(SolverErrorKind::LineSearchStalled,
                                  "no residual decrease at residual " + std::to_string(rn));
            }
        }
        s.swap(st);
        rn = residual_into(g, F, s, r, &dF, lap);
    }
    if (report)
        *report = rep;
    return ScalarField(initial.grid, std::move(s));
}

ScalarField monotone_iteration(const ScalarField& subsolution, const ScalarField& supersolution,
                               const WEquation& eq, const MonotoneSettings& settings, MonotoneReport* report)
{
    require_same_grid(subsolution, supersolution);
    require_same_grid(subsolution, eq.sources);
    const Grid& g = *subsolution.grid;
    const std::size_t n = g.size();
    const bool has_boundary = !eq.boundary.values.empty();
    if (has_boundary)
        require_same_grid(subsolution, eq.boundary);
    double smax = -INFINITY;
    for (std::size_t k = 0; k < n; ++k) {
        if (!g.unknown(k))
            continue;
        smax = std::max(smax, supersolution[k]);
        if (subsolution[k] > supersolution[k])
            throw std::invalid_argument("monotone_iteration: subsolution exceeds supersolution");
    }
    MonotoneReport rep;
    rep.c = eq.a * std::exp(smax) + 1.0;
    const double c = rep.c;

    Vec w = subsolution.values, lift(n, 0.0), lap(n), f(n), y(n), sigma(n, c);
    for (std::size_t k = 0; k < n; ++k)
        if (!g.unknown(k)) {
            lift[k] = has_boundary ? eq.boundary[k] : supersolution[k];
            w[k] = lift[k];
        }
    laplacian_apply(g, lift.data(), lap.data());
    const Vec lift_lap = lap;
    SpectralSolver spec(subsolution.grid);

    for (int it = 1; it <= settings.max_iter; ++it) {
        for (std::size_t k = 0; k < n; ++k)
            f[k] = g.unknown(k) ? (lift_lap[k] - (eq.a * std::exp(w[k]) - eq.b + eq.sources[k] - c * w[k])) : 0.0;
        for (std::size_t k = 0; k < n; ++k)
            y[k] = g.unknown(k) ? w[k] : 0.0;
        KrylovResult kr = solve_shifted_laplacian(spec, sigma, f, y, 1e-15, 1e-12, 5000);
        (void)kr;
        double inc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (!g.unknown(k))
                continue;
            const double wn = y[k];
            rep.max_decrease = std::max(rep.max_decrease, w[k] - wn);
            rep.max_above_super = std::max(rep.max_above_super, wn - supersolution[k]);
            inc = std::max(inc, std::abs(wn - w[k]));
            w[k] = wn;
        }
        rep.increments.push_back(inc);
        rep.iterations = it;
        if (rep.max_decrease > settings.rounding_slack || rep.max_above_super > settings.rounding_slack) {
            if (report)
                *report = rep;
            throw SolverError(SolverErrorKind::MonotonicityViolated,
                              "iterate left the ordered interval at sweep " + std::to_string(it));
        }
        if (inc <= settings.tol) {
            if (report)
                *report = rep;
            return ScalarField(subsolution.grid, std::move(w));
        }
    }
    if (report)
        *report = rep;
    throw SolverError(SolverErrorKind::MaxIterExceeded, "monotone iteration did not settle");
}

} // namespace bilayer
