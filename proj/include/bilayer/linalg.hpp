#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace bilayer {

using Vec = std::vector<double>;
using LinOp = std::function<void(const Vec& in, Vec& out)>;

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
double norm_inf(const Vec& a);
/// y += a*x
void axpy(double a, const Vec& x, Vec& y);

struct KrylovResult {
    int iterations = 0;
    double residual = 0.0; ///< final residual norm relative to the initial one
    bool converged = false;
};

/// Preconditioned conjugate gradients for SPD A with SPD preconditioner M.
/// Stops when the 2-norm of the residual drops below max(rtol*|b|, atol).
KrylovResult pcg(const LinOp& A, const LinOp& M, const Vec& b, Vec& x,
                 double rtol, double atol, int max_iter);

/// Preconditioned MINRES for symmetric (possibly indefinite) A, SPD M.
/// The stopping test uses the M^{-1}-norm residual estimate.
KrylovResult minres(const LinOp& A, const LinOp& M, const Vec& b, Vec& x,
                    double rtol, int max_iter);

} // namespace bilayer
