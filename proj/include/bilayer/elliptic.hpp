#pragma once

#include <functional>
#include <vector>

#include "bilayer/core.hpp"
#include "bilayer/grid.hpp"
#include "bilayer/linalg.hpp"
#include "bilayer/spectral.hpp"

namespace bilayer {

/// 5-point Laplacian. Periodic grids wrap; on Dirichlet grids the output is
/// computed at unknown nodes from stored neighbour values and is zero at
/// pinned nodes.
void laplacian_apply(const Grid& g, const double* in, double* out);
ScalarField laplacian_apply(const ScalarField& f);

/// Solves Delta_h out = rhs on a periodic grid; the output has zero mean.
/// Throws SolverError(NonZeroMean) when |mean(rhs)| > 1e-10 (1 + max|rhs|).
ScalarField poisson_solve_periodic(const ScalarField& rhs);

/// Solves Delta_h out = rhs at unknown nodes with out = boundary_values at
/// pinned nodes, by conjugate gradients. The residual infinity norm is <= tol.
ScalarField poisson_solve_dirichlet(const ScalarField& rhs, const ScalarField& boundary_values,
                                    double tol = 1e-10, int max_iter = 20000);

/// Solves (-Delta_h + sigma) y = f on unknown nodes with homogeneous data.
/// sigma >= 0 is nodal; the preconditioner is the box or torus transform with
/// the mean shift. Returns the Krylov statistics.
KrylovResult solve_shifted_laplacian(SpectralSolver& spec, const Vec& sigma, const Vec& f, Vec& y,
                                     double rtol, double atol, int max_iter = 5000);

struct NewtonSettings {
    double tol_residual = 1e-10; ///< infinity norm
    int max_iter = 50;
    double min_step = 1e-6;
};

struct NewtonReport {
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history; ///< residual infinity norm per iterate
    int linear_iterations = 0;
};

/// F(k, s) and dF/ds at node k; dF/ds must be nonnegative.
using LocalNonlinearity = std::function<void(std::size_t k, double s, double& F, double& dF)>;

/// Damped Newton for Delta_h s = F(x, s). Pinned values of the initial guess
/// are kept as Dirichlet data. Throws MaxIterExceeded or LineSearchStalled.
ScalarField semilinear_newton(const LocalNonlinearity& F, const ScalarField& initial,
                              const NewtonSettings& settings = {}, NewtonReport* report = nullptr,
                              SpectralSolver* spectral = nullptr);

/// Delta w = a e^w - b + sources.
struct WEquation {
    double a = 8.0;
    double b = 4.0;
    /// Nonnegative for the constant supersolution -ln(b/a); signed sources need
    /// a supersolution that accounts for the negative part.
    ScalarField sources;
    ScalarField boundary; ///< Dirichlet data at pinned nodes
};

struct MonotoneSettings {
    double tol = 1e-12; ///< on max|w_{k+1} - w_k|
    int max_iter = 5000;
    /// Largest decrease between sweeps tolerated as rounding of the linear
    /// solves; anything larger raises MonotonicityViolated.
    double rounding_slack = 1e-11;
};

struct MonotoneReport {
    int iterations = 0;
    double c = 0.0;
    double max_decrease = 0.0;   ///< largest w_k - w_{k+1} seen, 0 if none
    double max_above_super = 0.0; ///< largest w_k - super seen, 0 if none
    std::vector<double> increments;
};

/// Iterates (Delta_h - c) w_{k+1} = a e^{w_k} - b + sources - c w_k from
/// w_0 = subsolution, with c = a exp(max super) + 1.
ScalarField monotone_iteration(const ScalarField& subsolution, const ScalarField& supersolution,
                               const WEquation& eq, const MonotoneSettings& settings = {},
                               MonotoneReport* report = nullptr);

} // namespace bilayer
