#include "bilayer/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bilayer {

double dot(const Vec& a, const Vec& b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        s += a[k] * b[k];
    return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vec& a)
{
    double m = 0.0;
    for (double x : a)
        m = std::max(m, std::abs(x));
    return m;
}

void axpy(double a, const Vec& x, Vec& y)
{
    for (std::size_t k = 0; k < x.size(); ++k)
        y[k] += a * x[k];
}

KrylovResult pcg(const LinOp& A, const LinOp& M, const Vec& b, Vec& x,
                 double rtol, double atol, int max_iter)
{
    const std::size_t n = b.size();
    if (x.size() != n)
        x.assign(n, 0.0);
    Vec r(n), z(n), p(n), Ap(n);
    A(x, Ap);
    for (std::size_t k = 0; k < n; ++k)
        r[k] = b[k] - Ap[k];
    const double bnorm = norm2(b);
    const double target = std::max(rtol * bnorm, atol);
    KrylovResult res;
    double rnorm = norm2(r);
    const double r0 = std::max(rnorm, std::numeric_limits<double>::min());
    if (rnorm <= target) {
        res.converged = true;
        res.residual = rnorm / r0;
        return res;
    }
    M(r, z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        A(p, Ap);
        double pAp = dot(p, Ap);
        if (!(pAp > 0)) {
            res.iterations = it;
            res.residual = rnorm / r0;
            return res;
        }
        double alpha = rz / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        rnorm = norm2(r);
        res.iterations = it;
        if (rnorm <= target) {
            res.converged = true;
            break;
        }
        M(r, z);
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < n; ++k)
            p[k] = z[k] + beta * p[k];
    }
    res.residual = rnorm / r0;
    return res;
}

// Paige-Saunders recurrences, preconditioned form.
KrylovResult minres(const LinOp& A, const LinOp& M, const Vec& b, Vec& x,
                    double rtol, int max_iter)
{
    const std::size_t n = b.size();
    if (x.size() != n)
        x.assign(n, 0.0);
    KrylovResult res;
    Vec r1(n), r2(n), y(n), v(n), w(n, 0.0), w1(n), w2(n, 0.0), tmp(n);
    A(x, tmp);
    for (std::size_t k = 0; k < n; ++k)
        r1[k] = b[k] - tmp[k];
    M(r1, y);
    double beta1 = dot(r1, y);
    if (beta1 < 0)
        return res; // preconditioner not positive definite
    beta1 = std::sqrt(beta1);
    if (beta1 == 0) {
        res.converged = true;
        return res;
    }
    r2 = r1;
    double oldb = 0, beta = beta1, dbar = 0, epsln = 0, phibar = beta1;
    double cs = -1, sn = 0;
    const double tiny = std::numeric_limits<double>::epsilon();
    for (int it = 1; it <= max_iter; ++it) {
        const double s = 1.0 / beta;
        for (std::size_t k = 0; k < n; ++k)
            v[k] = s * y[k];
        A(v, y);
        if (it >= 2)
            axpy(-beta / oldb, r1, y);
        const double alfa = dot(v, y);
        axpy(-alfa / beta, r2, y);
        r1.swap(r2);
        r2 = y;
        M(r2, y);
        oldb = beta;
        beta = dot(r2, y);
        if (beta < 0)
            break;
        beta = std::sqrt(beta);
        const double oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        double gamma = std::max(std::hypot(gbar, beta), tiny);
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;
        const double denom = 1.0 / gamma;
        w1.swap(w2);
        w2.swap(w);
        for (std::size_t k = 0; k < n; ++k)
            w[k] = (v[k] - oldeps * w1[k] - delta * w2[k]) * denom;
        axpy(phi, w, x);
        res.iterations = it;
        res.residual = phibar / beta1;
        if (res.residual <= rtol) {
            res.converged = true;
            break;
        }
        if (beta == 0)
            break;
    }
    return res;
}

} // namespace bilayer
