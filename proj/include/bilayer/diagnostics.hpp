#pragma once

#include <string>
#include <vector>

#include "bilayer/core.hpp"
#include "bilayer/variational.hpp"

namespace bilayer {

/// Node selection by distance from the origin. Periodic grids only accept All.
struct Region {
    enum class Kind { All, Disk, Annulus };
    Kind kind = Kind::All;
    double r1 = 0.0, r2 = 0.0;

    static Region all() { return {}; }
    static Region disk(double r) { return {Kind::Disk, 0.0, r}; }
    static Region annulus(double r1, double r2) { return {Kind::Annulus, r1, r2}; }
};

/// h1 h2 times the sum over the unknown nodes in the region. Throws
/// std::invalid_argument for an empty region.
double quadrature(const ScalarField& f, const Region& region = Region::all());

struct IdentityReport {
    std::string name;
    double predicted = 0.0;
    double measured = 0.0;
    double rel_error = 0.0; ///< absolute error when predicted == 0
    double tolerance = 0.0;
    bool pass = false;
    double tail = 0.0; ///< truncation estimate, full plane only
};

/// Fills rel_error and pass.
IdentityReport make_identity(std::string name, double predicted, double measured, double tolerance);

/// int(k11 e^u + k12 e^v) = |Omega| - pi N1, its mirror, and the two
/// constraint integrals against alpha and beta.
std::vector<IdentityReport> torus_identities(const ScalarField& u, const ScalarField& v,
                                             const CouplingParams& params, const VortexConfiguration& vortices,
                                             double rel_tol = 1e-6);

/// int(2 - 2e^u - 2e^v) = pi N+ and int(e^u - e^v) = -pi p N- / (2q). The
/// zero-predicted form uses abs_tol.
std::vector<IdentityReport> fullplane_identities(const ScalarField& u, const ScalarField& v,
                                                 const CouplingParams& params, const VortexConfiguration& vortices,
                                                 double rel_tol = 0.02, double abs_tol = 1e-6);

struct SweepRow {
    double factor = 0.0; ///< area / threshold
    double area = 0.0;
    double alpha = 0.0, beta = 0.0;
    bool feasible = false;
    bool converged = false;
    std::string status; ///< "infeasible", solver status, or the error text
    double residual = 0.0;
    double constraint_error_u = 0.0; ///< relative, against alpha
    double constraint_error_v = 0.0;
    int iterations = 0;
};

struct SweepSettings {
    int n = 64;              ///< nodes per side
    double aspect = 1.0;     ///< tau2 / tau1
    OuterSettings outer;
};

/// Tori of the given areas with vortex positions given as fractions of the
/// cell, so the same configuration is scaled with the cell.
std::vector<SweepRow> threshold_sweep(const CouplingParams& params, const VortexConfiguration& fractional,
                                      const std::vector<double>& areas, const SweepSettings& settings);

/// pass iff max over unknown nodes of u and of v is strictly below -ln2.
IdentityReport max_principle_check(const ScalarField& u, const ScalarField& v);

/// Torus solve shared by the sweep and the command line tool.
struct TorusSolve {
    std::shared_ptr<TorusProblem> problem;
    VariationalState state;
    SolveReport report;
    ScalarField u, v;
    AlphaBeta ab;
};

/// Throws SolverError(Infeasible) below the threshold area.
TorusSolve solve_torus(const CouplingParams& params, const VortexConfiguration& vortices, double tau1, double tau2,
                       int n1, int n2, const OuterSettings& settings, double epsilon = 0.0);

} // namespace bilayer
