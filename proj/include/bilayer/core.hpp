#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bilayer/grid.hpp"

namespace bilayer {

enum class SolverErrorKind {
    MaxIterExceeded,
    LineSearchStalled,
    NonZeroMean,
    MonotonicityViolated,
    Infeasible,
    Stalled,
    DiagnosticOverflow,
    RegimeRejected,
};

const char* to_string(SolverErrorKind kind);

class SolverError : public std::runtime_error {
public:
    SolverError(SolverErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    SolverErrorKind kind() const { return kind_; }

private:
    SolverErrorKind kind_;
};

struct CouplingParams {
    double p = 1.0;
    double q = -0.5;
};

/// K = (1/p) [[p+q, p-q], [p-q, p+q]].
struct CouplingMatrix {
    double k11 = 0.0;
    double k12 = 0.0;
    double detK = 0.0;
};

enum class Regime { IndefiniteA, IndefiniteB, PositiveDefinite, Degenerate };

const char* to_string(Regime r);

struct VortexConfiguration {
    std::vector<Point> upper;
    std::vector<Point> lower;

    int N1() const { return static_cast<int>(upper.size()); }
    int N2() const { return static_cast<int>(lower.size()); }
    int Nplus() const { return N1() + N2(); }
    int Nminus() const { return N1() - N2(); }

    /// Same configuration with the two layers exchanged.
    VortexConfiguration swapped() const { return {lower, upper}; }
};

struct DomainSpec {
    enum class Kind { Torus, Disk, Rectangle };
    Kind kind = Kind::Torus;
    double a = 0.0; ///< tau1, R or Lx
    double b = 0.0; ///< tau2, unused for disks, or Ly

    static DomainSpec torus(double tau1, double tau2) { return {Kind::Torus, tau1, tau2}; }
    static DomainSpec disk(double R) { return {Kind::Disk, R, 0.0}; }
    static DomainSpec rectangle(double Lx, double Ly) { return {Kind::Rectangle, Lx, Ly}; }

    double area() const;
    /// Strict interior test; tori use the fundamental cell [0,tau1) x [0,tau2).
    bool contains(Point p) const;
};

const char* to_string(DomainSpec::Kind k);

void validate(const CouplingParams& params);

/// Throws std::invalid_argument for p <= 0 or q == 0.
CouplingMatrix build_coupling(const CouplingParams& params);

Regime classify_regime(const CouplingMatrix& K);

/// Throws SolverError(RegimeRejected) unless the regime is indefinite.
void require_indefinite(const CouplingMatrix& K);

/// Lower end of q for regime A at fixed p: -4 <= 4q/p < 0 gives q >= -p.
double regime_a_min_q(double p);

/// Smallest torus area admitting a solution, (pi/2)(|p/q||N-| + N+).
double threshold_area(const CouplingParams& params, const VortexConfiguration& vortices);

struct AlphaBeta {
    double alpha = 0.0;
    double beta = 0.0;
    bool feasible = false;
};

AlphaBeta alpha_beta(double area, const CouplingParams& params, const VortexConfiguration& vortices);

struct ChargeObservables {
    double Q = 0.0;      ///< integral of e^u + e^v - 1
    double Qtilde = 0.0; ///< integral of e^u - e^v
    double PhiCS = 0.0;  ///< 2 q Qtilde
};

ChargeObservables charge_observables(const ScalarField& u, const ScalarField& v,
                                     const CouplingParams& params);

/// Closed-form predictions for the same observables on the full plane.
ChargeObservables predicted_charges(const CouplingParams& params, const VortexConfiguration& vortices);

} // namespace bilayer
