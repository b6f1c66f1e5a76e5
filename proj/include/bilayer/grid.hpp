#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace bilayer {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

enum class Boundary { Periodic, Dirichlet };

/// Uniform node grid. Index k = j*n1 + i with i along x.
///
/// Periodic grids cover [0,tau1) x [0,tau2) with n*h = period.
/// Dirichlet grids carry a mask: 1 marks an unknown node, 0 a pinned node.
/// The outermost ring is always pinned.
class Grid {
public:
    static std::shared_ptr<const Grid> periodic(double tau1, double tau2, int n1, int n2);
    /// Nodes span [-Lx/2, Lx/2] x [-Ly/2, Ly/2] including the edges.
    static std::shared_ptr<const Grid> rectangle(double Lx, double Ly, int n1, int n2);
    /// Square [-R, R]^2 with nodes outside the open disk pinned.
    static std::shared_ptr<const Grid> disk(double R, int n);

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    double h1() const { return h1_; }
    double h2() const { return h2_; }
    double cell_area() const { return h1_ * h2_; }
    Boundary boundary() const { return boundary_; }
    bool is_periodic() const { return boundary_ == Boundary::Periodic; }
    std::size_t size() const { return static_cast<std::size_t>(n1_) * static_cast<std::size_t>(n2_); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n1_ + i; }

    double x(int i) const { return x0_ + i * h1_; }
    double y(int j) const { return y0_ + j * h2_; }
    Point node(std::size_t k) const { return {x(static_cast<int>(k % n1_)), y(static_cast<int>(k / n1_))}; }

    /// True for nodes that are solved for (all nodes of a periodic grid).
    bool unknown(std::size_t k) const { return mask_.empty() || mask_[k] != 0; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    std::size_t unknown_count() const;

    /// Disk radius for disk grids, 0 otherwise.
    double disk_radius() const { return disk_R_; }
    /// Extent of the grid box (periods for torus).
    double length_x() const { return Lx_; }
    double length_y() const { return Ly_; }

    bool contains(Point p) const;
    bool same_as(const Grid& other) const;

private:
    Grid() = default;
    int n1_ = 0, n2_ = 0;
    double h1_ = 0, h2_ = 0, x0_ = 0, y0_ = 0;
    double Lx_ = 0, Ly_ = 0, disk_R_ = 0;
    Boundary boundary_ = Boundary::Periodic;
    std::vector<std::uint8_t> mask_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Nodal values on a grid.
struct ScalarField {
    GridPtr grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(GridPtr g, double fill = 0.0)
        : grid(std::move(g)), values(grid->size(), fill) {}
    ScalarField(GridPtr g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t k) { return values[k]; }
    double operator[](std::size_t k) const { return values[k]; }
    double* data() { return values.data(); }
    const double* data() const { return values.data(); }
};

/// Throws std::invalid_argument if the two fields live on different grids.
void require_same_grid(const ScalarField& a, const ScalarField& b);

/// Bilinear interpolation. Periodic grids wrap; on Dirichlet grids p must lie
/// in the node box.
double interpolate(const ScalarField& f, Point p);

/// Midpoint sum h1*h2*sum over the unknown nodes of the grid.
double integrate(const ScalarField& f);

} // namespace bilayer
