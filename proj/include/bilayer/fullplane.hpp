#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "bilayer/core.hpp"
#include "bilayer/elliptic.hpp"
#include "bilayer/sources.hpp"
#include "bilayer/variational.hpp"

namespace bilayer {

struct ContinuationSchedule {
    std::vector<double> epsilons; ///< strictly decreasing
    std::vector<double> radii;    ///< strictly increasing

    /// eps_k = (2h)^2 2^{-k}, k = 0..levels-1, and radii {4, 6, 8, 12}.
    static ContinuationSchedule defaults(double h, int levels = 5);
    /// Throws std::invalid_argument unless both lists are strictly monotone
    /// and every radius exceeds R0.
    void validate(double R0) const;
};

/// ln m(r) + (1/2) ln r = ln C - rate r, where m(r) is the largest of
/// |u + ln2|, |v + ln2| on the circle of radius r.
struct DecayFit {
    double rate = 0.0;
    double power = -0.5; ///< fixed in the main fit
    double C = 0.0;
    double r_min = 0.0, r_max = 0.0;
    double r2 = 0.0;
    int samples = 0;
    /// Pure exponential ln m = a - rate r on the same samples.
    double rate_exponential = 0.0;
    double r2_exponential = 0.0;
    /// Three-parameter fit ln m = a - rate r + power ln r.
    double free_rate = 0.0;
    double free_power = 0.0;
    /// Fixed-power fit of the gradient magnitude.
    double gradient_rate = 0.0;
    double gradient_r2 = 0.0;
};

/// Largest distance of a vortex from the origin.
double vortex_radius(const VortexConfiguration& vortices);

/// Solves Delta u = 8(e^u - 1) + (regularized sources) with u = 0 on the
/// boundary, continuing over the decreasing epsilons. Returns u <= 0.
ScalarField single_equation_solve(const std::vector<Point>& points, const GridPtr& grid,
                                  const std::vector<double>& epsilons, const NewtonSettings& settings = {});

/// (4/pi) int (1 - e^u) - 2 Nplus over the unknown nodes.
double lambda_estimate(const ScalarField& u, int Nplus);

struct StageRecord {
    double R = 0.0;
    double epsilon = 0.0;
    int nodes = 0; ///< per side
    bool converged = false;
    int iterations = 0;
    double I = 0.0;
    double residual = 0.0;
    double indicator = 0.0; ///< max of |u + ln2|, |v + ln2| on the circle r = R - 1
    double max_shifted = 0.0; ///< max of u + ln2, v + ln2 over unknown nodes
    double seconds = 0.0;
};

struct ContinuationSettings {
    /// Grid spacing kept across radii. 2R/h with small prime factors keeps the
    /// sine transforms fast.
    double h = 1.0 / 16.0;
    OuterSettings outer = [] {
        OuterSettings s;
        s.method = OuterMethod::NewtonKrylov;
        return s;
    }();
    /// Called after every stage with the stage fields.
    std::function<void(const StageRecord&, const ScalarField& u, const ScalarField& v, const BoundedProblem&)>
        observer;
};

struct ContinuationResult {
    ScalarField u, v;
    SolveReport report; ///< last stage
    std::vector<StageRecord> stages;
    std::shared_ptr<BoundedProblem> problem; ///< last stage
};

/// Coupled solves on growing disks, each continued over the epsilon list,
/// warm-started from the previous stage padded with -ln2. Regime A only.
ContinuationResult domain_continuation(const CouplingParams& params, const VortexConfiguration& vortices,
                                       const ContinuationSchedule& schedule, const ContinuationSettings& settings);

/// Max over the circle of radius r of |f| sampled at `angles` points.
double circle_max_abs(const ScalarField& f, double r, int angles = 128);

/// Phi(r) = 4 min over the circle of (k12/2)q(v~) + (k11/2)q(u~),
/// q(s) = |e^s - 1|/|s| with q(0) = 1.
std::vector<std::pair<double, double>> phi_profile(const ScalarField& u, const ScalarField& v,
                                                   const CouplingMatrix& K, const std::vector<double>& radii,
                                                   int angles = 64);

struct BellmanSolution {
    std::vector<double> t, w;
    double ratio_min = 0.0, ratio_max = 0.0; ///< w / (e^{-2t} t^{-1/2}) over [t0, T-1]
};

/// Finite-difference solution of w'' + w'/t - (lambda + phi(t)) w = 0 on
/// [t0, T], w(t0) = alpha0, w(T) = 0, with phi linearly interpolated from the
/// profile (held constant outside it).
BellmanSolution bellman_ode_solve(const std::vector<std::pair<double, double>>& phi, double t0, double T,
                                  double alpha0, double lambda = 4.0, int intervals = 4000);

/// Fits over [r_min, r_max] using `samples` radii. Throws std::invalid_argument
/// when the window leaves the resolved region or has fewer than 10 samples.
DecayFit decay_fit(const ScalarField& u, const ScalarField& v, double r_min, double r_max, int samples = 40);

struct SandwichReport {
    MonotoneReport monotone;
    double min_source = 0.0;        ///< most negative discrete source
    double max_super_shifted = 0.0; ///< max of the supersolution + ln2
    double max_w_shifted = 0.0;  ///< max of w + ln2 over unknown nodes, must be < 0
    double min_gap = 0.0;        ///< min of w - (u+v)/2, must be >= 0
    ScalarField w;
};

/// Runs the monotone scheme for Delta w = 8 e^w - 4 + s, w = -ln2 on the
/// boundary, upward from (u+v)/2. The source s is half the sum of the
/// discrete sources carried by the coupled problem. For eps below about h^2/2
/// the discrete sources dip below zero next to a vortex; the supersolution is
/// then -ln2 + z with Delta_h z = min(s, 0), z = 0 on the boundary, and is
/// exactly -ln2 otherwise.
SandwichReport sandwich_check(const ScalarField& u, const ScalarField& v, const BoundedProblem& problem,
                              const MonotoneSettings& settings = {});

} // namespace bilayer
