#pragma once

#include <functional>
#include <memory>

#include "bilayer/grid.hpp"
#include "bilayer/linalg.hpp"

namespace bilayer {

/// Diagonalizes the 5-point Laplacian of a grid with FFTW.
///
/// Periodic grids use a real-to-complex transform; Dirichlet grids use a
/// type-I sine transform on the box interior. On a masked grid the box
/// transform is applied with the pinned nodes zeroed, which makes the result
/// a preconditioner rather than an inverse.
class SpectralSolver {
public:
    explicit SpectralSolver(GridPtr grid);
    ~SpectralSolver();
    SpectralSolver(const SpectralSolver&) = delete;
    SpectralSolver& operator=(const SpectralSolver&) = delete;

    /// out = m(-Delta_h) in, where m receives each eigenvalue lambda >= 0 of
    /// -Delta_h. Modes where m is not finite are mapped to zero.
    void apply_symbol(const Vec& in, Vec& out, const std::function<double(double)>& m);

    /// out = (-Delta_h + c)^{-1} in (mean-free output for c = 0, periodic).
    void solve_shifted(const Vec& in, Vec& out, double c);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    /// True when the transform inverts the operator exactly (no mask).
    bool exact() const { return exact_; }

private:
    struct Impl;
    GridPtr grid_;
    bool exact_ = true;
    std::unique_ptr<Impl> impl_;
};

} // namespace bilayer
