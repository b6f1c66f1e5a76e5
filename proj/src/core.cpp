#include "bilayer/core.hpp"

#include <cmath>
#include <numbers>

namespace bilayer {

const char* to_string(SolverErrorKind kind)
{
    switch (kind) {
    case SolverErrorKind::MaxIterExceeded: return "MaxIterExceeded";
    case SolverErrorKind::LineSearchStalled: return "LineSearchStalled";
    case SolverErrorKind::NonZeroMean: return "NonZeroMean";
    case SolverErrorKind::MonotonicityViolated: return "MonotonicityViolated";
    case SolverErrorKind::Infeasible: return "Infeasible";
    case SolverErrorKind::Stalled: return "Stalled";
    case SolverErrorKind::DiagnosticOverflow: return "DiagnosticOverflow";
    case SolverErrorKind::RegimeRejected: return "RegimeRejected";
    }
    return "Unknown";
}

const char* to_string(Regime r)
{
    switch (r) {
    case Regime::IndefiniteA: return "IndefiniteA";
    case Regime::IndefiniteB: return "IndefiniteB";
    case Regime::PositiveDefinite: return "PositiveDefinite";
    case Regime::Degenerate: return "Degenerate";
    }
    return "Unknown";
}

const char* to_string(DomainSpec::Kind k)
{
    switch (k) {
    case DomainSpec::Kind::Torus: return "torus";
    case DomainSpec::Kind::Disk: return "disk";
    case DomainSpec::Kind::Rectangle: return "rectangle";
    }
    return "unknown";
}

double DomainSpec::area() const
{
    switch (kind) {
    case Kind::Torus: return a * b;
    case Kind::Disk: return std::numbers::pi * a * a;
    case Kind::Rectangle: return a * b;
    }
    return 0.0;
}

bool DomainSpec::contains(Point p) const
{
    switch (kind) {
    case Kind::Torus: return p.x >= 0 && p.x < a && p.y >= 0 && p.y < b;
    case Kind::Disk: return p.x * p.x + p.y * p.y < a * a;
    case Kind::Rectangle: return std::abs(p.x) < 0.5 * a && std::abs(p.y) < 0.5 * b;
    }
    return false;
}

void validate(const CouplingParams& params)
{
    if (!std::isfinite(params.p) || !std::isfinite(params.q))
        throw std::invalid_argument("p and q must be finite");
    if (!(params.p > 0))
        throw std::invalid_argument("p must be positive");
    if (params.q == 0)
        throw std::invalid_argument("q must be nonzero");
}

CouplingMatrix build_coupling(const CouplingParams& params)
{
    validate(params);
    CouplingMatrix K;
    K.k11 = (params.p + params.q) / params.p;
    K.k12 = (params.p - params.q) / params.p;
    K.detK = 4.0 * params.q / params.p;
    double alt = K.k11 * K.k11 - K.k12 * K.k12;
    if (std::abs(alt - K.detK) > 1e-12 * std::max(1.0, std::abs(K.detK)))
        throw std::logic_error("determinant mismatch between k11^2-k12^2 and 4q/p");
    return K;
}

Regime classify_regime(const CouplingMatrix& K)
{
    constexpr double slack = 1e-12;
    if (K.detK > 0)
        return Regime::PositiveDefinite;
    if (K.detK == 0)
        return Regime::Degenerate;
    if (K.detK >= -4.0) {
        if (!(K.k12 > 1 - slack && K.k12 <= 2 + slack && K.k11 >= -slack && K.k11 < 1 + slack))
            throw std::logic_error("regime A entries out of range");
        return Regime::IndefiniteA;
    }
    if (!(K.k12 > 2 - slack && K.k11 < slack))
        throw std::logic_error("regime B entries out of range");
    return Regime::IndefiniteB;
}

void require_indefinite(const CouplingMatrix& K)
{
    Regime r = classify_regime(K);
    if (r == Regime::PositiveDefinite)
        throw SolverError(SolverErrorKind::RegimeRejected,
                          "det K > 0 is the positive definite regime, which is out of scope here");
    if (r == Regime::Degenerate)
        throw SolverError(SolverErrorKind::RegimeRejected, "det K = 0 is degenerate and out of scope");
}

double regime_a_min_q(double p) { return -p; }

double threshold_area(const CouplingParams& params, const VortexConfiguration& vortices)
{
    validate(params);
    return 0.5 * std::numbers::pi *
           (std::abs(params.p / params.q) * std::abs(vortices.Nminus()) + vortices.Nplus());
}

AlphaBeta alpha_beta(double area, const CouplingParams& params, const VortexConfiguration& vortices)
{
    validate(params);
    if (!(area > 0))
        throw std::invalid_argument("area must be positive");
    // t flips sign exactly under layer exchange, so alpha and beta swap bitwise
    const double t = (params.p / params.q) * vortices.Nminus();
    const double np = vortices.Nplus();
    AlphaBeta ab;
    ab.alpha = 0.5 * area - 0.25 * std::numbers::pi * (t + np);
    ab.beta = 0.5 * area - 0.25 * std::numbers::pi * (-t + np);
    ab.feasible = ab.alpha > 0 && ab.beta > 0;
    return ab;
}

ChargeObservables charge_observables(const ScalarField& u, const ScalarField& v,
                                     const CouplingParams& params)
{
    require_same_grid(u, v);
    validate(params);
    ScalarField a(u.grid), b(u.grid);
    for (std::size_t k = 0; k < u.size(); ++k) {
        double eu = std::exp(u[k]), ev = std::exp(v[k]);
        a[k] = eu + ev - 1.0;
        b[k] = eu - ev;
    }
    ChargeObservables c;
    c.Q = integrate(a);
    c.Qtilde = integrate(b);
    c.PhiCS = 2.0 * params.q * c.Qtilde;
    return c;
}

ChargeObservables predicted_charges(const CouplingParams& params, const VortexConfiguration& vortices)
{
    validate(params);
    ChargeObservables c;
    c.Q = -0.5 * std::numbers::pi * vortices.Nplus();
    c.Qtilde = -std::numbers::pi * params.p * vortices.Nminus() / (2.0 * params.q);
    c.PhiCS = 2.0 * params.q * c.Qtilde;
    return c;
}

} // namespace bilayer
