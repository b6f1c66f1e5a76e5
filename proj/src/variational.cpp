#include "bilayer/variational.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bilayer {

namespace {

constexpr double kExpGuard = 700.0;

double guarded_exp(double a)
{
    if (!(a <= kExpGuard))
        throw SolverError(SolverErrorKind::DiagnosticOverflow,
                          "exponent argument " + std::to_string(a) + " exceeds the guard");
    return std::exp(a);
}

/// sum over grid edges of (difference / spacing)^2
double gradient_energy(const Grid& g, const Vec& v)
{
    const int n1 = g.n1(), n2 = g.n2();
    const double a = 1.0 / (g.h1() * g.h1()), b = 1.0 / (g.h2() * g.h2());
    const bool per = g.is_periodic();
    double sx = 0.0, sy = 0.0;
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i) {
            const double c = v[g.index(i, j)];
            if (i + 1 < n1 || per) {
                const double d = v[g.index(i + 1 < n1 ? i + 1 : 0, j)] - c;
                sx += d * d;
            }
            if (j + 1 < n2 || per) {
                const double d = v[g.index(i, j + 1 < n2 ? j + 1 : 0)] - c;
                sy += d * d;
            }
        }
    return a * sx + b * sy;
}

double inf_norm_unknown(const Grid& g, const Vec& v)
{
    double m = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (g.unknown(k))
            m = std::max(m, std::abs(v[k]));
    return m;
}

} // namespace

// ---------------------------------------------------------------------------

ReducedProblem::ReducedProblem(GridPtr grid, CouplingMatrix K)
    : grid_(std::move(grid)), K_(K), spectral_(std::make_unique<SpectralSolver>(grid_)), lap_(grid_->size())
{
    require_indefinite(K_);
}

void ReducedProblem::project(Vec& v) const
{
    const Grid& g = *grid_;
    if (g.is_periodic()) {
        double m = 0.0;
        for (double x : v)
            m += x;
        m /= static_cast<double>(v.size());
        for (double& x : v)
            x -= m;
        return;
    }
    for (std::size_t k = 0; k < v.size(); ++k)
        if (!g.unknown(k))
            v[k] = 0.0;
}

void ReducedProblem::precond_gradient(const Vec& in, Vec& out)
{
    spectral_->solve_shifted(in, out, 0.0);
    project(out);
}

// ---------------------------------------------------------------------------

BoundedProblem::BoundedProblem(const CouplingMatrix& K, RegularizedBackground bg)
    : ReducedProblem(bg.f0.grid, K), bg_(std::move(bg))
{
    if (grid_->is_periodic())
        throw std::invalid_argument("BoundedProblem needs a Dirichlet grid");
}

void BoundedProblem::exponentials(const Vec& xi, const Vec& zeta, Vec& ep, Vec& em) const
{
    const Grid& g = *grid_;
    ep.assign(g.size(), 0.0);
    em.assign(g.size(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.unknown(k))
            continue;
        ep[k] = guarded_exp(bg_.f0[k] + 0.5 * (xi[k] + zeta[k]));
        em[k] = guarded_exp(bg_.g0[k] + 0.5 * (xi[k] - zeta[k]));
    }
}

InnerResult BoundedProblem::inner(const Vec& zeta, Vec& xi, const InnerSettings& s)
{
    const Grid& g = *grid_;
    const auto& f0 = bg_.f0.values;
    const auto& g0 = bg_.g0.values;
    const auto& h1 = bg_.h1.values;
    const auto& h2 = bg_.h2.values;
    LocalNonlinearity F = [&](std::size_t k, double x, double& f, double& df) {
        const double ep = guarded_exp(f0[k] + 0.5 * (x + zeta[k]));
        const double em = guarded_exp(g0[k] + 0.5 * (x - zeta[k]));
        f = (4.0 * (ep + em) - 8.0) + (h1[k] + h2[k]);
        df = 2.0 * (ep + em);
    };
    ScalarField init(grid_, xi);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (!g.unknown(k))
            init[k] = 0.0;
    NewtonSettings ns;
    ns.tol_residual = s.tol;
    ns.max_iter = s.max_iter;
    NewtonReport rep;
    ScalarField out = semilinear_newton(F, init, ns, &rep, spectral_.get());
    xi = std::move(out.values);
    InnerResult r;
    r.iterations = rep.iterations;
    r.residual = rep.residual;
    r.linear_iterations = rep.linear_iterations;
    return r;
}

void BoundedProblem::inner_residual(const Vec& xi, const Vec& zeta, Vec& r)
{
    const Grid& g = *grid_;
    Vec ep, em;
    exponentials(xi, zeta, ep, em);
    laplacian_apply(g, xi.data(), lap_.data());
    r.assign(g.size(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.unknown(k))
            r[k] = -lap_[k] + ((4.0 * (ep[k] + em[k]) - 8.0) + (bg_.h1[k] + bg_.h2[k]));
}

void BoundedProblem::outer_residual(const Vec& xi, const Vec& zeta, double, double, Vec& gr)
{
    const Grid& g = *grid_;
    Vec ep, em;
    exponentials(xi, zeta, ep, em);
    laplacian_apply(g, zeta.data(), lap_.data());
    gr.assign(g.size(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.unknown(k))
            gr[k] = (-lap_[k] + K_.detK * (ep[k] - em[k])) + (bg_.h1[k] - bg_.h2[k]);
}

double BoundedProblem::functional(const Vec& xi, const Vec& zeta, double, double)
{
    const Grid& g = *grid_;
    const double dk = K_.detK;
    Vec ep, em;
    exponentials(xi, zeta, ep, em);
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.unknown(k))
            continue;
        s += 2.0 * dk * (ep[k] + em[k]) - 2.0 * dk * xi[k] + 0.25 * dk * (bg_.h1[k] + bg_.h2[k]) * xi[k] +
             (bg_.h1[k] - bg_.h2[k]) * zeta[k];
    }
    return weight() * (0.125 * dk * gradient_energy(g, xi) + 0.5 * gradient_energy(g, zeta) + s);
}

double BoundedProblem::inner_functional(const Vec& xi, const Vec& zeta, double, double)
{
    const Grid& g = *grid_;
    const double dk = K_.detK;
    Vec ep, em;
    exponentials(xi, zeta, ep, em);
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.unknown(k))
            continue;
        s += 2.0 * dk * (ep[k] + em[k]) - 2.0 * dk * xi[k] + 0.25 * dk * (bg_.h1[k] + bg_.h2[k]) * xi[k];
    }
    return -weight() * (0.125 * dk * gradient_energy(g, xi) + s);
}

void BoundedProblem::linearize(const Vec& xi, const Vec& zeta)
{
    const Grid& g = *grid_;
    Vec ep, em;
    exponentials(xi, zeta, ep, em);
    S_.assign(g.size(), 0.0);
    D_.assign(g.size(), 0.0);
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.unknown(k))
            continue;
        S_[k] = ep[k] + em[k];
        D_[k] = ep[k] - em[k];
        sum += S_[k];
        ++cnt;
    }
    const double mean = sum / static_cast<double>(cnt);
    c1_ = 2.0 * mean;
    c2_ = 0.5 * K_.detK * mean;
}

void BoundedProblem::apply_Rx(const Vec& in, Vec& out)
{
    const Grid& g = *grid_;
    laplacian_apply(g, in.data(), lap_.data());
    out.resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k)
        out[k] = g.unknown(k) ? -lap_[k] + 2.0 * S_[k] * in[k] : 0.0;
}

void BoundedProblem::apply_Ry(const Vec& in, Vec& out)
{
    out.resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k)
        out[k] = 2.0 * D_[k] * in[k];
}

void BoundedProblem::apply_gy(const Vec& in, Vec& out)
{
    const Grid& g = *grid_;
    laplacian_apply(g, in.data(), lap_.data());
    out.resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k)
        out[k] = g.unknown(k) ? -lap_[k] + 0.5 * K_.detK * S_[k] * in[k] : 0.0;
}

void BoundedProblem::precond_x(const Vec& in, Vec& out) { spectral_->solve_shifted(in, out, c1_); }

void BoundedProblem::precond_y(const Vec& in, Vec& out)
{
    const double c = c2_, floor = 0.1 * std::abs(c2_) + 1e-8;
    spectral_->apply_symbol(in, out, [c, floor](double lam) { return 1.0 / std::max(std::abs(lam + c), floor); });
}

// ---------------------------------------------------------------------------

TorusProblem::TorusProblem(const CouplingMatrix& K, TorusBackground bg, double area, int Nplus, int Nminus,
                           double alpha, double beta)
    : ReducedProblem(bg.u0.grid, K), bg_(std::move(bg)), area_(area), Nplus_(Nplus), Nminus_(Nminus),
      alpha_(alpha), beta_(beta)
{
    if (!grid_->is_periodic())
        throw std::invalid_argument("TorusProblem needs a periodic grid");
    if (!(alpha > 0) || !(beta > 0))
        throw SolverError(SolverErrorKind::Infeasible, "alpha and beta must be positive; the area is below threshold");
    c0_ = 8.0 - 4.0 * std::numbers::pi * Nplus_ / area_;
    src_ = 4.0 * std::numbers::pi * Nminus_ / area_;
}

void TorusProblem::densities(const Vec& xi, const Vec& zeta, Vec& P, Vec& Q, double& lnA, double& lnB) const
{
    const std::size_t n = grid_->size();
    P.resize(n);
    Q.resize(n);
    double amax = -INFINITY, bmax = -INFINITY;
    for (std::size_t k = 0; k < n; ++k) {
        P[k] = bg_.u0[k] + 0.5 * (xi[k] + zeta[k]);
        Q[k] = bg_.v0[k] + 0.5 * (xi[k] - zeta[k]);
        amax = std::max(amax, P[k]);
        bmax = std::max(bmax, Q[k]);
    }
    if (!std::isfinite(amax) || !std::isfinite(bmax))
        throw SolverError(SolverErrorKind::DiagnosticOverflow, "nonfinite exponent in torus densities");
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        P[k] = std::exp(P[k] - amax);
        Q[k] = std::exp(Q[k] - bmax);
        sa += P[k];
        sb += Q[k];
    }
    const double w = weight();
    lnA = amax + std::log(w * sa);
    lnB = bmax + std::log(w * sb);
    const double ia = 1.0 / (w * sa), ib = 1.0 / (w * sb);
    for (std::size_t k = 0; k < n; ++k) {
        P[k] *= ia;
        Q[k] *= ib;
    }
}

std::pair<double, double> TorusProblem::means(double lnA, double lnB) const
{
    const double la = std::log(alpha_), lb = std::log(beta_);
    return {(la + lb) - (lnA + lnB), (la - lb) + (lnB - lnA)};
}

void TorusProblem::apply_M(const Vec& D, const Vec& in, Vec& out) const
{
    const double c = weight() * dot(D, in);
    out.resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k)
        out[k] = D[k] * in[k] - c * D[k];
}

void TorusProblem::inner_residual(const Vec& xi, const Vec& zeta, Vec& r)
{
    Vec P, Q;
    double lnA, lnB;
    densities(xi, zeta, P, Q, lnA, lnB);
    laplacian_apply(*grid_, xi.data(), lap_.data());
    r.resize(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k)
        r[k] = -lap_[k] + (8.0 * (alpha_ * P[k] + beta_ * Q[k]) - c0_);
}

InnerResult TorusProblem::inner(const Vec& zeta, Vec& xi, const InnerSettings& s)
{
    const Grid& g = *grid_;
    const std::size_t n = g.size();
    const double w = weight();
    project(xi);
    Vec P, Q, r(n), delta(n), xt(n), Pt, Qt;
    double lnA, lnB;
    auto energy = [&](const Vec& x, double la, double lb) {
        return 0.5 * w * gradient_energy(g, x) + 16.0 * (alpha_ * la + beta_ * lb);
    };
    auto residual = [&](const Vec& x, const Vec& Pd, const Vec& Qd, Vec& out) {
        laplacian_apply(g, x.data(), lap_.data());
        for (std::size_t k = 0; k < n; ++k)
            out[k] = -lap_[k] + (8.0 * (alpha_ * Pd[k] + beta_ * Qd[k]) - c0_);
        project(out);
        return norm_inf(out);
    };
    densities(xi, zeta, P, Q, lnA, lnB);
    double rn = residual(xi, P, Q, r);
    double E = energy(xi, lnA, lnB);
    InnerResult res;
    for (int it = 0;; ++it) {
        res.iterations = it;
        res.residual = rn;
        if (rn <= s.tol)
            break;
        if (it >= s.max_iter)
            throw SolverError(SolverErrorKind::MaxIterExceeded,
                              "torus inner solve residual " + std::to_string(rn));
        linearize(xi, zeta);
        Vec neg(n);
        for (std::size_t k = 0; k < n; ++k)
            neg[k] = -r[k];
        std::fill(delta.begin(), delta.end(), 0.0);
        const double rtol = std::clamp(0.1 * rn, 1e-14, 1e-3);
        KrylovResult kr = pcg([this](const Vec& a, Vec& b) { apply_Rx(a, b); },
                              [this](const Vec& a, Vec& b) { precond_x(a, b); }, neg, delta, rtol, 0.0, 2000);
        res.linear_iterations += kr.iterations;
        project(delta);
        const double slope = w * dot(r, delta);
        const double r2 = norm2(r);
        double t = 1.0;
        Vec rt(n);
        for (;;) {
            for (std::size_t k = 0; k < n; ++k)
                xt[k] = xi[k] + t * delta[k];
            double la, lb;
            bool ok = true;
            try {
                densities(xt, zeta, Pt, Qt, la, lb);
            } catch (const SolverError&) {
                ok = false;
            }
            if (ok) {
                const double Et = energy(xt, la, lb);
                const double rtn = residual(xt, Pt, Qt, rt);
                if (std::isfinite(Et) && (Et <= E + 1e-4 * t * slope || norm2(rt) <= (1.0 - 1e-4 * t) * r2)) {
                    xi.swap(xt);
                    P.swap(Pt);
                    Q.swap(Qt);
                    lnA = la;
                    lnB = lb;
                    E = Et;
                    r.swap(rt);
                    rn = rtn;
                    break;
                }
            }
            t *= 0.5;
            if (t < 1e-8)
                throw SolverError(SolverErrorKind::LineSearchStalled,
                                  "torus inner line search at residual " + std::to_string(rn));
        }
    }
    auto [xb, zb] = means(lnA, lnB);
    res.xibar = xb;
    res.zetabar = zb;
    return res;
}

void TorusProblem::outer_residual(const Vec& xi, const Vec& zeta, double, double, Vec& gr)
{
    Vec P, Q;
    double lnA, lnB;
    densities(xi, zeta, P, Q, lnA, lnB);
    laplacian_apply(*grid_, zeta.data(), lap_.data());
    gr.resize(xi.size());
    const double dk2 = 2.0 * K_.detK;
    for (std::size_t k = 0; k < xi.size(); ++k)
        gr[k] = (-lap_[k] + dk2 * (alpha_ * P[k] - beta_ * Q[k])) + src_;
}

double TorusProblem::functional(const Vec& xi, const Vec& zeta, double xibar, double zetabar)
{
    const Grid& g = *grid_;
    const double dk = K_.detK;
    const double lin_xi = -2.0 * dk + std::numbers::pi * dk * Nplus_ / area_;
    const double sp = 0.5 * (xibar + zetabar), sm = 0.5 * (xibar - zetabar);
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double ep = guarded_exp(bg_.u0[k] + 0.5 * (xi[k] + zeta[k]) + sp);
        const double em = guarded_exp(bg_.v0[k] + 0.5 * (xi[k] - zeta[k]) + sm);
        s += 4.0 * dk * (ep + em) + lin_xi * (xi[k] + xibar) + src_ * (zeta[k] + zetabar);
    }
    return weight() * (0.125 * dk * gradient_energy(g, xi) + 0.5 * gradient_energy(g, zeta) + s);
}

double TorusProblem::inner_functional(const Vec& xi, const Vec& zeta, double xibar, double zetabar)
{
    const Grid& g = *grid_;
    const double dk = K_.detK;
    const double lin_xi = -2.0 * dk + std::numbers::pi * dk * Nplus_ / area_;
    const double sp = 0.5 * (xibar + zetabar), sm = 0.5 * (xibar - zetabar);
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double ep = guarded_exp(bg_.u0[k] + 0.5 * (xi[k] + zeta[k]) + sp);
        const double em = guarded_exp(bg_.v0[k] + 0.5 * (xi[k] - zeta[k]) + sm);
        s += 4.0 * dk * (ep + em) + lin_xi * (xi[k] + xibar);
    }
    return -weight() * (0.125 * dk * gradient_energy(g, xi) + s);
}

void TorusProblem::linearize(const Vec& xi, const Vec& zeta)
{
    double lnA, lnB;
    densities(xi, zeta, P_, Q_, lnA, lnB);
    c1_ = 4.0 * (alpha_ + beta_) / area_;
    c2_ = K_.detK * (alpha_ + beta_) / area_;
}

void TorusProblem::apply_Rx(const Vec& in, Vec& out)
{
    Vec mp, mq;
    apply_M(P_, in, mp);
    apply_M(Q_, in, mq);
    laplacian_apply(*grid_, in.data(), lap_.data());
    out.resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k)
        out[k] = -lap_[k] + 4.0 * (alpha_ * mp[k] + beta_ * mq[k]);
    project(out);
}

void TorusProblem::apply_Ry(const Vec& in, Vec& out)
{
    Vec mp, mq;
    apply_M(P_, in, mp);
    apply_M(Q_, in, mq);
    out.resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k)
        out[k] = 4.0 * (alpha_ * mp[k] - beta_ * mq[k]);
    project(out);
}

void TorusProblem::apply_gy(const Vec& in, Vec& out)
{
    Vec mp, mq;
    apply_M(P_, in, mp);
    apply_M(Q_, in, mq);
    laplacian_apply(*grid_, in.data(), lap_.data());
    out.resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k)
        out[k] = -lap_[k] + K_.detK * (alpha_ * mp[k] + beta_ * mq[k]);
    project(out);
}

void TorusProblem::precond_x(const Vec& in, Vec& out)
{
    spectral_->solve_shifted(in, out, c1_);
    project(out);
}

void TorusProblem::precond_y(const Vec& in, Vec& out)
{
    const double c = c2_, floor = 0.1 * std::abs(c2_) + 1e-8;
    spectral_->apply_symbol(in, out, [c, floor](double lam) {
        return lam == 0.0 ? INFINITY : 1.0 / std::max(std::abs(lam + c), floor);
    });
    project(out);
}

// ---------------------------------------------------------------------------

std::pair<double, double> torus_mean_update(const ScalarField& xitilde, const ScalarField& zetatilde,
                                            const TorusBackground& background, double alpha, double beta)
{
    require_same_grid(xitilde, zetatilde);
    require_same_grid(xitilde, background.u0);
    if (!(alpha > 0) || !(beta > 0))
        throw SolverError(SolverErrorKind::Infeasible, "alpha and beta must be positive");
    const Grid& g = *xitilde.grid;
    double amax = -INFINITY, bmax = -INFINITY;
    Vec a(g.size()), b(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        a[k] = background.u0[k] + 0.5 * (xitilde[k] + zetatilde[k]);
        b[k] = background.v0[k] + 0.5 * (xitilde[k] - zetatilde[k]);
        amax = std::max(amax, a[k]);
        bmax = std::max(bmax, b[k]);
    }
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        sa += std::exp(a[k] - amax);
        sb += std::exp(b[k] - bmax);
    }
    const double lnA = amax + std::log(g.cell_area() * sa);
    const double lnB = bmax + std::log(g.cell_area() * sb);
    const double la = std::log(alpha), lb = std::log(beta);
    return {(la + lb) - (lnA + lnB), (la - lb) + (lnB - lnA)};
}

double functional_I_bounded(const VariationalState& state, const RegularizedBackground& background,
                            const CouplingMatrix& K)
{
    BoundedProblem pb(K, background);
    return pb.functional(state.xi.values, state.zeta.values, 0.0, 0.0);
}

double functional_I_torus(const VariationalState& state, const TorusBackground& background,
                          const CouplingMatrix& K, double area, int Nplus, int Nminus)
{
    // alpha, beta do not enter I itself; any positive pair builds the problem
    TorusProblem pb(K, background, area, Nplus, Nminus, 1.0, 1.0);
    return pb.functional(state.xi.values, state.zeta.values, state.xibar, state.zetabar);
}

ScalarField inner_solve(const ScalarField& zeta, ReducedProblem& problem, const InnerSettings& settings,
                        const ScalarField* guess, InnerResult* result)
{
    Vec z = zeta.values;
    problem.project(z);
    Vec xi = guess ? guess->values : Vec(z.size(), 0.0);
    InnerResult r = problem.inner(z, xi, settings);
    if (result)
        *result = r;
    return ScalarField(problem.grid(), std::move(xi));
}

ScalarField outer_residual(const VariationalState& state, ReducedProblem& problem)
{
    ScalarField g(problem.grid());
    problem.outer_residual(state.xi.values, state.zeta.values, state.xibar, state.zetabar, g.values);
    return g;
}

const char* to_string(OuterMethod m)
{
    return m == OuterMethod::NewtonKrylov ? "newton-krylov" : "gradient-bb";
}

OuterMethod outer_method_from_string(const std::string& s)
{
    if (s == "newton-krylov" || s == "newton")
        return OuterMethod::NewtonKrylov;
    if (s == "gradient-bb" || s == "bb")
        return OuterMethod::GradientBB;
    throw std::invalid_argument("unknown outer method '" + s + "'");
}

VariationalState zero_state(const ReducedProblem& problem)
{
    VariationalState s;
    s.xi = ScalarField(problem.grid());
    s.zeta = ScalarField(problem.grid());
    s.torus = problem.torus();
    return s;
}

namespace {

struct Iterate {
    Vec xi, zeta, g, rin;
    double xibar = 0, zetabar = 0, I = 0;
    double ri = 0, ro = 0;
};

void evaluate(ReducedProblem& pb, Iterate& it, const InnerResult& ir)
{
    it.xibar = ir.xibar;
    it.zetabar = ir.zetabar;
    pb.outer_residual(it.xi, it.zeta, it.xibar, it.zetabar, it.g);
    pb.inner_residual(it.xi, it.zeta, it.rin);
    it.I = pb.functional(it.xi, it.zeta, it.xibar, it.zetabar);
    const Grid& g = *pb.grid();
    it.ro = inf_norm_unknown(g, it.g);
    Vec rp = it.rin;
    pb.project(rp);
    it.ri = inf_norm_unknown(g, rp);
}

// Tries zeta + t*dz with xi + t*dx as the inner warm start.
bool trial(ReducedProblem& pb, const Iterate& cur, const Vec& dx, const Vec& dz, double t,
           const InnerSettings& is, Iterate& out, int& lin)
{
    const std::size_t n = cur.zeta.size();
    out.zeta.resize(n);
    out.xi.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.zeta[k] = cur.zeta[k] + t * dz[k];
        out.xi[k] = cur.xi[k] + t * dx[k];
    }
    pb.project(out.zeta);
    pb.project(out.xi);
    try {
        InnerResult ir = pb.inner(out.zeta, out.xi, is);
        lin += ir.linear_iterations;
        evaluate(pb, out, ir);
    } catch (const SolverError&) {
        return false;
    }
    return std::isfinite(out.I) && std::isfinite(out.ro);
}

} // namespace

double resolution(double I) { return 1e-12 * std::max(1.0, std::abs(I)); }

VariationalState nested_minimize(ReducedProblem& pb, const VariationalState& initial, const OuterSettings& s,
                                 SolveReport& report)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Grid& g = *pb.grid();
    const std::size_t n = g.size();
    const double w = pb.weight();
    const double dk = pb.coupling().detK;
    report = SolveReport{};
    report.method = to_string(s.method);

    Iterate cur;
    cur.zeta = initial.zeta.values;
    cur.xi = initial.xi.values.empty() ? Vec(n, 0.0) : initial.xi.values;
    pb.project(cur.zeta);
    pb.project(cur.xi);
    {
        InnerResult ir = pb.inner(cur.zeta, cur.xi, s.inner);
        evaluate(pb, cur, ir);
        report.history.push_back({0, cur.I, cur.ri, cur.ro, 0.0, ir.linear_iterations});
    }
    auto done = [&]() { return std::max(cur.ri, cur.ro) <= s.tol; };

    if (s.method == OuterMethod::NewtonKrylov) {
        const double q = 0.25 * dk, aq = std::abs(q);
        Vec ta(n), tb(n), tc(n);
        LinOp A = [&](const Vec& in, Vec& out) {
            Vec a(in.begin(), in.begin() + n), b(in.begin() + n, in.end());
            out.assign(2 * n, 0.0);
            pb.apply_Rx(a, ta);
            pb.apply_Ry(b, tb);
            for (std::size_t k = 0; k < n; ++k)
                out[k] = q * (ta[k] + tb[k]);
            pb.apply_Ry(a, ta);
            pb.apply_gy(b, tc);
            for (std::size_t k = 0; k < n; ++k)
                out[n + k] = q * ta[k] + tc[k];
        };
        LinOp M = [&](const Vec& in, Vec& out) {
            Vec a(in.begin(), in.begin() + n), b(in.begin() + n, in.end());
            out.assign(2 * n, 0.0);
            pb.precond_x(a, ta);
            pb.precond_y(b, tb);
            for (std::size_t k = 0; k < n; ++k) {
                out[k] = ta[k] / aq;
                out[n + k] = tb[k];
            }
        };
        int it = 0;
        for (; it < s.newton_max_iter && !done(); ++it) {
            pb.linearize(cur.xi, cur.zeta);
            Vec rhs(2 * n), sol(2 * n, 0.0);
            Vec rp = cur.rin;
            pb.project(rp);
            for (std::size_t k = 0; k < n; ++k) {
                rhs[k] = -q * rp[k];
                rhs[n + k] = -cur.g[k];
            }
            const double rtol = std::clamp(0.1 * cur.ro, 1e-10, 1e-2);
            KrylovResult kr = minres(A, M, rhs, sol, rtol, s.minres_max_iter);
            int lin = kr.iterations;
            Vec dx(sol.begin(), sol.begin() + n), dz(sol.begin() + n, sol.end());
            const double g2 = norm2(cur.g);
            double t = 1.0;
            Iterate nxt;
            bool accepted = false;
            while (t >= 1e-6) {
                if (trial(pb, cur, dx, dz, t, s.inner, nxt, lin) && norm2(nxt.g) <= (1.0 - 1e-4 * t) * g2) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) {
                report.status = "stalled";
                break;
            }
            cur = std::move(nxt);
            report.history.push_back({it + 1, cur.I, cur.ri, cur.ro, t, lin});
        }
        report.iterations = it;
        if (report.status.empty())
            report.status = done() ? "converged" : "max_iter";
    } else {
        Vec pg(n), d(n), zeros(n, 0.0);
        pb.precond_gradient(cur.g, pg);
        double tau = 1.0;
        int it = 0;
        for (; it < s.max_iter && !done(); ++it) {
            for (std::size_t k = 0; k < n; ++k)
                d[k] = -pg[k];
            const double gpg = dot(cur.g, pg);
            const double slope = -w * gpg;
            double t = tau;
            Iterate nxt;
            bool accepted = false;
            int lin = 0;
            const double res = resolution(cur.I);
            while (t >= s.min_step) {
                if (trial(pb, cur, zeros, d, t, s.inner, nxt, lin)) {
                    if (nxt.I <= cur.I + 1e-4 * t * slope) {
                        accepted = true;
                        break;
                    }
                    // Below the resolution of I the decrease is measured by the
                    // trapezoidal path integral of the gradient instead.
                    if (nxt.I <= cur.I + res) {
                        double dI = 0.0;
                        for (std::size_t k = 0; k < n; ++k)
                            dI += (cur.g[k] + nxt.g[k]) * d[k];
                        dI *= 0.5 * w * t;
                        if (dI <= 1e-4 * t * slope) {
                            accepted = true;
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            if (!accepted) {
                report.status = "stalled";
                break;
            }
            if (nxt.I > cur.I + res)
                throw std::logic_error("accepted descent step increased I");
            // BB1 in the preconditioned metric: <s, P^{-1} s> = t^2 <g, P g>
            double sy = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                sy += t * d[k] * (nxt.g[k] - cur.g[k]);
            const double sPs = t * t * gpg;
            tau = sy > 0 ? std::clamp(sPs / sy, 1e-6, 1e6) : std::min(1e6, 2.0 * t);
            cur = std::move(nxt);
            pb.precond_gradient(cur.g, pg);
            report.history.push_back({it + 1, cur.I, cur.ri, cur.ro, t, lin});
        }
        report.iterations = it;
        if (report.status.empty())
            report.status = done() ? "converged" : "max_iter";
    }

    report.converged = done();
    report.final.I = cur.I;
    report.final.J = pb.inner_functional(cur.xi, cur.zeta, cur.xibar, cur.zetabar);
    report.final.residual_inner = cur.ri;
    report.final.residual_outer = cur.ro;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    VariationalState st;
    st.torus = pb.torus();
    st.xi = ScalarField(pb.grid(), std::move(cur.xi));
    st.zeta = ScalarField(pb.grid(), std::move(cur.zeta));
    st.xibar = cur.xibar;
    st.zetabar = cur.zetabar;
    return st;
}

std::pair<ScalarField, ScalarField> recover_uv(const VariationalState& state, const ReducedProblem& problem)
{
    const GridPtr& gp = problem.grid();
    ScalarField u(gp), v(gp);
    if (auto* tp = dynamic_cast<const TorusProblem*>(&problem)) {
        const auto& bg = tp->background();
        const double sp = 0.5 * (state.xibar + state.zetabar), sm = 0.5 * (state.xibar - state.zetabar);
        for (std::size_t k = 0; k < u.size(); ++k) {
            u[k] = bg.u0[k] + 0.5 * (state.xi[k] + state.zeta[k]) + sp;
            v[k] = bg.v0[k] + 0.5 * (state.xi[k] - state.zeta[k]) + sm;
        }
        return {u, v};
    }
    const auto& bg = dynamic_cast<const BoundedProblem&>(problem).background();
    const double ln2 = std::numbers::ln2;
    for (std::size_t k = 0; k < u.size(); ++k) {
        u[k] = bg.f0[k] + 0.5 * (state.xi[k] + state.zeta[k]) - ln2;
        v[k] = bg.g0[k] + 0.5 * (state.xi[k] - state.zeta[k]) - ln2;
    }
    return {u, v};
}

double original_system_residual(const ScalarField& u, const ScalarField& v, const ReducedProblem& problem,
                                const VortexConfiguration& vortices, double exclusion)
{
    require_same_grid(u, v);
    const Grid& g = *u.grid;
    const CouplingMatrix& K = problem.coupling();
    Vec su(g.size()), sv(g.size()), lu(g.size()), lv(g.size());
    if (auto* tp = dynamic_cast<const TorusProblem*>(&problem)) {
        const auto& bg = tp->background();
        const double area = g.length_x() * g.length_y();
        ScalarField bu = periodic_delta_sum(vortices.upper, bg.epsilon, u.grid);
        ScalarField bv = periodic_delta_sum(vortices.lower, bg.epsilon, u.grid);
        const double cu = 4.0 * std::numbers::pi * vortices.N1() / area - bg.bump_mean_u;
        const double cv = 4.0 * std::numbers::pi * vortices.N2() / area - bg.bump_mean_v;
        for (std::size_t k = 0; k < g.size(); ++k) {
            su[k] = bu[k] + cu;
            sv[k] = bv[k] + cv;
        }
    } else {
        const auto& bg = dynamic_cast<const BoundedProblem&>(problem).background();
        laplacian_apply(g, bg.f0.data(), lu.data());
        laplacian_apply(g, bg.g0.data(), lv.data());
        for (std::size_t k = 0; k < g.size(); ++k) {
            su[k] = lu[k] + bg.h1[k];
            sv[k] = lv[k] + bg.h2[k];
        }
    }
    laplacian_apply(g, u.data(), lu.data());
    laplacian_apply(g, v.data(), lv.data());
    double m = 0.0;
    const double ex2 = exclusion * exclusion;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.unknown(k))
            continue;
        const Point x = g.node(k);
        bool near = false;
        for (const auto* list : {&vortices.upper, &vortices.lower})
            for (const Point& p : *list) {
                const double dx = x.x - p.x, dy = x.y - p.y;
                if (dx * dx + dy * dy < ex2)
                    near = true;
            }
        if (near)
            continue;
        const double eu = std::exp(u[k]), ev = std::exp(v[k]);
        const double ru = lu[k] - ((4.0 * K.k11 * eu + 4.0 * K.k12 * ev - 4.0) + su[k]);
        const double rv = lv[k] - ((4.0 * K.k12 * eu + 4.0 * K.k11 * ev - 4.0) + sv[k]);
        m = std::max({m, std::abs(ru), std::abs(rv)});
    }
    return m;
}

VariationalState state_from_uv(const ScalarField& u, const ScalarField& v, const ReducedProblem& problem)
{
    require_same_grid(u, v);
    VariationalState s = zero_state(problem);
    const Grid& g = *u.grid;
    if (auto* tp = dynamic_cast<const TorusProblem*>(&problem)) {
        const auto& bg = tp->background();
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double u1 = u[k] - bg.u0[k], v1 = v[k] - bg.v0[k];
            s.xi[k] = u1 + v1;
            s.zeta[k] = u1 - v1;
        }
        double mx = 0, mz = 0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            mx += s.xi[k];
            mz += s.zeta[k];
        }
        mx /= static_cast<double>(g.size());
        mz /= static_cast<double>(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            s.xi[k] -= mx;
            s.zeta[k] -= mz;
        }
        s.xibar = mx;
        s.zetabar = mz;
        return s;
    }
    const auto& bg = dynamic_cast<const BoundedProblem&>(problem).background();
    const double ln2 = std::numbers::ln2;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.unknown(k))
            continue;
        const double u3 = (u[k] + ln2) - bg.f0[k], v3 = (v[k] + ln2) - bg.g0[k];
        s.xi[k] = u3 + v3;
        s.zeta[k] = u3 - v3;
    }
    return s;
}

} // namespace bilayer
