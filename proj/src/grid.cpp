#include "bilayer/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bilayer {

GridPtr Grid::periodic(double tau1, double tau2, int n1, int n2)
{
    if (!(tau1 > 0) || !(tau2 > 0) || n1 < 4 || n2 < 4)
        throw std::invalid_argument("periodic grid needs positive periods and at least 4 nodes per direction");
    auto g = std::shared_ptr<Grid>(new Grid());
    g->n1_ = n1;
    g->n2_ = n2;
    g->h1_ = tau1 / n1;
    g->h2_ = tau2 / n2;
    g->Lx_ = tau1;
    g->Ly_ = tau2;
    g->boundary_ = Boundary::Periodic;
    return g;
}

GridPtr Grid::rectangle(double Lx, double Ly, int n1, int n2)
{
    if (!(Lx > 0) || !(Ly > 0) || n1 < 3 || n2 < 3)
        throw std::invalid_argument("rectangle grid needs positive sides and at least 3 nodes per direction");
    auto g = std::shared_ptr<Grid>(new Grid());
    g->n1_ = n1;
    g->n2_ = n2;
    g->h1_ = Lx / (n1 - 1);
    g->h2_ = Ly / (n2 - 1);
    g->x0_ = -0.5 * Lx;
    g->y0_ = -0.5 * Ly;
    g->Lx_ = Lx;
    g->Ly_ = Ly;
    g->boundary_ = Boundary::Dirichlet;
    g->mask_.assign(g->size(), 1);
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i)
            if (i == 0 || j == 0 || i == n1 - 1 || j == n2 - 1)
                g->mask_[g->index(i, j)] = 0;
    return g;
}

GridPtr Grid::disk(double R, int n)
{
    if (!(R > 0) || n < 5)
        throw std::invalid_argument("disk grid needs R > 0 and at least 5 nodes per direction");
    auto g = std::shared_ptr<Grid>(new Grid());
    g->n1_ = n;
    g->n2_ = n;
    g->h1_ = 2.0 * R / (n - 1);
    g->h2_ = g->h1_;
    g->x0_ = -R;
    g->y0_ = -R;
    g->Lx_ = 2.0 * R;
    g->Ly_ = 2.0 * R;
    g->disk_R_ = R;
    g->boundary_ = Boundary::Dirichlet;
    g->mask_.assign(g->size(), 0);
    for (int j = 1; j < n - 1; ++j)
        for (int i = 1; i < n - 1; ++i) {
            double x = g->x(i), y = g->y(j);
            if (x * x + y * y < R * R)
                g->mask_[g->index(i, j)] = 1;
        }
    return g;
}

std::size_t Grid::unknown_count() const
{
    if (mask_.empty())
        return size();
    std::size_t c = 0;
    for (auto m : mask_)
        c += m;
    return c;
}

bool Grid::contains(Point p) const
{
    if (is_periodic())
        return p.x >= 0 && p.x < Lx_ && p.y >= 0 && p.y < Ly_;
    if (disk_R_ > 0)
        return p.x * p.x + p.y * p.y < disk_R_ * disk_R_;
    return std::abs(p.x) < 0.5 * Lx_ && std::abs(p.y) < 0.5 * Ly_;
}

bool Grid::same_as(const Grid& o) const
{
    if (this == &o)
        return true;
    return n1_ == o.n1_ && n2_ == o.n2_ && h1_ == o.h1_ && h2_ == o.h2_ && x0_ == o.x0_ &&
           y0_ == o.y0_ && boundary_ == o.boundary_ && disk_R_ == o.disk_R_ && mask_ == o.mask_;
}

ScalarField::ScalarField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v))
{
    if (values.size() != grid->size())
        throw std::invalid_argument("field length does not match grid node count");
}

void require_same_grid(const ScalarField& a, const ScalarField& b)
{
    if (!a.grid || !b.grid || !a.grid->same_as(*b.grid))
        throw std::invalid_argument("fields live on different grids");
}

double integrate(const ScalarField& f)
{
    const Grid& g = *f.grid;
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (g.unknown(k))
            s += f[k];
    return s * g.cell_area();
}

double interpolate(const ScalarField& f, Point p)
{
    const Grid& g = *f.grid;
    double sx = (p.x - g.x(0)) / g.h1(), sy = (p.y - g.y(0)) / g.h2();
    int i0, j0, i1, j1;
    if (g.is_periodic()) {
        sx -= g.n1() * std::floor(sx / g.n1());
        sy -= g.n2() * std::floor(sy / g.n2());
        i0 = std::min(static_cast<int>(sx), g.n1() - 1);
        j0 = std::min(static_cast<int>(sy), g.n2() - 1);
        i1 = (i0 + 1) % g.n1();
        j1 = (j0 + 1) % g.n2();
    } else {
        const double tol = 1e-9;
        if (sx < -tol || sy < -tol || sx > g.n1() - 1 + tol || sy > g.n2() - 1 + tol)
            throw std::out_of_range("interpolation point outside the grid");
        sx = std::clamp(sx, 0.0, g.n1() - 1.0);
        sy = std::clamp(sy, 0.0, g.n2() - 1.0);
        i0 = std::min(static_cast<int>(sx), g.n1() - 2);
        j0 = std::min(static_cast<int>(sy), g.n2() - 2);
        i1 = i0 + 1;
        j1 = j0 + 1;
    }
    const double a = sx - i0, b = sy - j0;
    return (1 - a) * (1 - b) * f[g.index(i0, j0)] + a * (1 - b) * f[g.index(i1, j0)] +
           (1 - a) * b * f[g.index(i0, j1)] + a * b * f[g.index(i1, j1)];
}

} // namespace bilayer
