#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bilayer/core.hpp"
#include "bilayer/elliptic.hpp"
#include "bilayer/sources.hpp"
#include "bilayer/spectral.hpp"

namespace bilayer {

/// (xi, zeta). On a torus xi and zeta hold the mean-free parts and the means
/// live in xibar, zetabar.
struct VariationalState {
    ScalarField xi;
    ScalarField zeta;
    double xibar = 0.0;
    double zetabar = 0.0;
    bool torus = false;
};

struct FunctionalValue {
    double I = 0.0;
    double J = 0.0;
    double residual_inner = 0.0;
    double residual_outer = 0.0;
};

struct InnerSettings {
    double tol = 1e-10; ///< infinity norm of the first equation
    int max_iter = 80;
};

struct InnerResult {
    int iterations = 0;
    double residual = 0.0;
    int linear_iterations = 0;
    double xibar = 0.0;
    double zetabar = 0.0;
};

/// The nested problem seen from the outer variable zeta.
///
/// Vectors are full-grid; pinned nodes stay zero and torus vectors are kept
/// mean-free. The linear maps act at the point set by linearize():
///   Rx = d(first equation)/dxi, SPD;  Ry = d(first equation)/dzeta;
///   gy = d(outer residual)/dzeta;  d(outer residual)/dxi = (detK/4) Ry.
class ReducedProblem {
public:
    virtual ~ReducedProblem() = default;

    const GridPtr& grid() const { return grid_; }
    const CouplingMatrix& coupling() const { return K_; }
    bool torus() const { return grid_->is_periodic(); }

    /// Solves the first equation for xi given zeta; xi is the warm start.
    virtual InnerResult inner(const Vec& zeta, Vec& xi, const InnerSettings& s) = 0;
    /// -Delta xi + (nonlinear part); zero exactly at an admissible pair.
    virtual void inner_residual(const Vec& xi, const Vec& zeta, Vec& r) = 0;
    virtual void outer_residual(const Vec& xi, const Vec& zeta, double xibar, double zetabar, Vec& g) = 0;
    virtual double functional(const Vec& xi, const Vec& zeta, double xibar, double zetabar) = 0;
    /// Inner functional J_zeta(xi) in the sign convention I = (zeta part) - J.
    virtual double inner_functional(const Vec& xi, const Vec& zeta, double xibar, double zetabar) = 0;

    virtual void linearize(const Vec& xi, const Vec& zeta) = 0;
    virtual void apply_Rx(const Vec& in, Vec& out) = 0;
    virtual void apply_Ry(const Vec& in, Vec& out) = 0;
    virtual void apply_gy(const Vec& in, Vec& out) = 0;
    /// SPD approximations of Rx^{-1} and |gy|^{-1}.
    virtual void precond_x(const Vec& in, Vec& out) = 0;
    virtual void precond_y(const Vec& in, Vec& out) = 0;
    /// (-Delta_h)^{-1}, the metric of the preconditioned gradient step.
    void precond_gradient(const Vec& in, Vec& out);

    /// Zero pinned entries, remove the mean on a torus.
    void project(Vec& v) const;
    double weight() const { return grid_->cell_area(); }

protected:
    ReducedProblem(GridPtr grid, CouplingMatrix K);
    GridPtr grid_;
    CouplingMatrix K_;
    std::unique_ptr<SpectralSolver> spectral_;
    Vec lap_;
};

class BoundedProblem final : public ReducedProblem {
public:
    BoundedProblem(const CouplingMatrix& K, RegularizedBackground bg);

    const RegularizedBackground& background() const { return bg_; }

    InnerResult inner(const Vec& zeta, Vec& xi, const InnerSettings& s) override;
    void inner_residual(const Vec& xi, const Vec& zeta, Vec& r) override;
    void outer_residual(const Vec& xi, const Vec& zeta, double, double, Vec& g) override;
    double functional(const Vec& xi, const Vec& zeta, double, double) override;
    double inner_functional(const Vec& xi, const Vec& zeta, double, double) override;
    void linearize(const Vec& xi, const Vec& zeta) override;
    void apply_Rx(const Vec& in, Vec& out) override;
    void apply_Ry(const Vec& in, Vec& out) override;
    void apply_gy(const Vec& in, Vec& out) override;
    void precond_x(const Vec& in, Vec& out) override;
    void precond_y(const Vec& in, Vec& out) override;

private:
    void exponentials(const Vec& xi, const Vec& zeta, Vec& ep, Vec& em) const;
    RegularizedBackground bg_;
    Vec S_, D_;
    double c1_ = 0, c2_ = 0;
};

class TorusProblem final : public ReducedProblem {
public:
    TorusProblem(const CouplingMatrix& K, TorusBackground bg, double area, int Nplus, int Nminus,
                 double alpha, double beta);

    const TorusBackground& background() const { return bg_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    InnerResult inner(const Vec& zeta, Vec& xi, const InnerSettings& s) override;
    void inner_residual(const Vec& xi, const Vec& zeta, Vec& r) override;
    void outer_residual(const Vec& xi, const Vec& zeta, double xibar, double zetabar, Vec& g) override;
    double functional(const Vec& xi, const Vec& zeta, double xibar, double zetabar) override;
    double inner_functional(const Vec& xi, const Vec& zeta, double xibar, double zetabar) override;
    void linearize(const Vec& xi, const Vec& zeta) override;
    void apply_Rx(const Vec& in, Vec& out) override;
    void apply_Ry(const Vec& in, Vec& out) override;
    void apply_gy(const Vec& in, Vec& out) override;
    void precond_x(const Vec& in, Vec& out) override;
    void precond_y(const Vec& in, Vec& out) override;

    /// Normalized densities P = e^a / int e^a, a = u0 + (xi+zeta)/2, and the
    /// logarithms of the two integrals.
    void densities(const Vec& xi, const Vec& zeta, Vec& P, Vec& Q, double& lnA, double& lnB) const;
    /// xibar, zetabar from the two constraint integrals.
    std::pair<double, double> means(double lnA, double lnB) const;

private:
    TorusBackground bg_;
    double area_;
    int Nplus_, Nminus_;
    double alpha_, beta_;
    double c0_;   ///< 8 - 4 pi N+ / |Omega|
    double src_;  ///< 4 pi N- / |Omega|
    Vec P_, Q_;
    double c1_ = 0, c2_ = 0;
    void apply_M(const Vec& D, const Vec& in, Vec& out) const;
};

/// Mean components from the constraint integrals; throws Infeasible unless
/// alpha, beta > 0.
std::pair<double, double> torus_mean_update(const ScalarField& xitilde, const ScalarField& zetatilde,
                                            const TorusBackground& background, double alpha, double beta);

double functional_I_bounded(const VariationalState& state, const RegularizedBackground& background,
                            const CouplingMatrix& K);

double functional_I_torus(const VariationalState& state, const TorusBackground& background,
                          const CouplingMatrix& K, double area, int Nplus, int Nminus);

ScalarField inner_solve(const ScalarField& zeta, ReducedProblem& problem, const InnerSettings& settings = {},
                        const ScalarField* guess = nullptr, InnerResult* result = nullptr);

/// Reduced gradient field -Delta zeta + detK e^+ - detK e^- + (h1 - h2)
/// (bounded) or its torus analogue. Zero at a critical point.
ScalarField outer_residual(const VariationalState& state, ReducedProblem& problem);

enum class OuterMethod { NewtonKrylov, GradientBB };

const char* to_string(OuterMethod m);
OuterMethod outer_method_from_string(const std::string& s);

struct OuterSettings {
    OuterMethod method = OuterMethod::GradientBB;
    double tol = 1e-8; ///< on max(inner, outer) residual, infinity norm
    int max_iter = 5000;
    int newton_max_iter = 60;
    int minres_max_iter = 3000;
    double min_step = 1e-12;
    InnerSettings inner;
};

struct IterationRecord {
    int iteration = 0;
    double I = 0.0;
    double residual_inner = 0.0;
    double residual_outer = 0.0;
    double step = 0.0;
    int linear_iterations = 0;
};

struct SolveReport {
    bool converged = false;
    std::string status;
    std::string method;
    int iterations = 0;
    FunctionalValue final;
    std::vector<IterationRecord> history;
    double seconds = 0.0;
};

/// Rounding level of the computed reduced functional. Accepted descent steps
/// never raise I by more than this.
double resolution(double I);

/// Nested solve: inner constraint by Newton, outer by the chosen method.
/// The initial state provides zeta (and a warm start for xi).
VariationalState nested_minimize(ReducedProblem& problem, const VariationalState& initial,
                                 const OuterSettings& settings, SolveReport& report);

/// Zero state on the problem grid.
VariationalState zero_state(const ReducedProblem& problem);

/// Unshifted fields (u, v) from a converged state.
std::pair<ScalarField, ScalarField> recover_uv(const VariationalState& state, const ReducedProblem& problem);

/// Residual of the original system at the recovered fields, evaluated with the
/// discrete source carried by the background. Nodes closer than exclusion to
/// a vortex are skipped.
double original_system_residual(const ScalarField& u, const ScalarField& v, const ReducedProblem& problem,
                                const VortexConfiguration& vortices, double exclusion);

/// State whose recovered fields approximate (u, v), used for warm starts.
VariationalState state_from_uv(const ScalarField& u, const ScalarField& v, const ReducedProblem& problem);

} // namespace bilayer
