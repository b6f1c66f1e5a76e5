#pragma once

#include <vector>

#include "bilayer/core.hpp"
#include "bilayer/grid.hpp"

namespace bilayer {

/// sum_j 4 eps / (eps + |x - p_j|^2)^2 at every node.
ScalarField regularized_delta_sum(const std::vector<Point>& points, double epsilon, const GridPtr& grid);

struct BackgroundFields {
    ScalarField u0eps, v0eps; ///< sum_j ln((eps + r^2)/(1 + r^2))
    ScalarField h1, h2;       ///< sum_j 4/(1 + r^2)^2
};

BackgroundFields background_fields(const VortexConfiguration& vortices, double epsilon, const GridPtr& grid);

/// Discrete harmonic extension of the pinned values of boundary_data.
ScalarField harmonic_correction(const ScalarField& boundary_data, double tol = 1e-10);

struct RegularizedBackground {
    double epsilon = 0.0;
    ScalarField u0eps, v0eps, h1, h2;
    ScalarField U0eps, V0eps; ///< harmonic, equal to -u0eps, -v0eps on the boundary
    ScalarField f0, g0;       ///< u0eps + U0eps, v0eps + V0eps
};

/// Everything a bounded-domain solve needs for one epsilon.
RegularizedBackground regularized_background(const VortexConfiguration& vortices, double epsilon,
                                             const GridPtr& grid, double tol = 1e-10);

struct TorusBackground {
    double epsilon = 0.0;
    ScalarField u0, v0; ///< mean zero
    /// Discrete mean of the periodized bumps before balancing; the balanced
    /// source carries exactly 4 pi per vortex after adding 4 pi N/|Omega|.
    double bump_mean_u = 0.0, bump_mean_v = 0.0;
};

/// Periodized bump sum over the 3x3 neighbouring cells.
ScalarField periodic_delta_sum(const std::vector<Point>& points, double epsilon, const GridPtr& grid);

TorusBackground torus_background(const VortexConfiguration& vortices, const GridPtr& grid, double epsilon);

/// (2h)^2 with h the larger spacing.
double default_epsilon(const Grid& grid);

} // namespace bilayer
