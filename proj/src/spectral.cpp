#include "bilayer/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace bilayer {

namespace {
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace

struct SpectralSolver::Impl {
    int m1 = 0, m2 = 0; // transform extents
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan fwd = nullptr, bwd = nullptr;
    std::vector<double> lam1, lam2;
    double norm = 1.0;

    ~Impl()
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (fwd)
            fftw_destroy_plan(fwd);
        if (bwd && bwd != fwd)
            fftw_destroy_plan(bwd);
        fftw_free(real);
        fftw_free(spec);
    }
};

SpectralSolver::SpectralSolver(GridPtr grid) : grid_(std::move(grid)), impl_(std::make_unique<Impl>())
{
    const Grid& g = *grid_;
    Impl& d = *impl_;
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (g.is_periodic()) {
        d.m1 = g.n1();
        d.m2 = g.n2();
        const int nc = d.m1 / 2 + 1;
        d.real = fftw_alloc_real(static_cast<std::size_t>(d.m1) * d.m2);
        d.spec = fftw_alloc_complex(static_cast<std::size_t>(nc) * d.m2);
        d.fwd = fftw_plan_dft_r2c_2d(d.m2, d.m1, d.real, d.spec, FFTW_ESTIMATE);
        d.bwd = fftw_plan_dft_c2r_2d(d.m2, d.m1, d.spec, d.real, FFTW_ESTIMATE);
        d.lam1.resize(nc);
        d.lam2.resize(d.m2);
        for (int k = 0; k < nc; ++k) {
            double s = std::sin(std::numbers::pi * k / d.m1);
            d.lam1[k] = 4.0 * s * s / (g.h1() * g.h1());
        }
        for (int k = 0; k < d.m2; ++k) {
            double s = std::sin(std::numbers::pi * k / d.m2);
            d.lam2[k] = 4.0 * s * s / (g.h2() * g.h2());
        }
        d.norm = 1.0 / (static_cast<double>(d.m1) * d.m2);
        exact_ = true;
    } else {
        d.m1 = g.n1() - 2;
        d.m2 = g.n2() - 2;
        d.real = fftw_alloc_real(static_cast<std::size_t>(d.m1) * d.m2);
        d.fwd = fftw_plan_r2r_2d(d.m2, d.m1, d.real, d.real, FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
        d.bwd = d.fwd;
        d.lam1.resize(d.m1);
        d.lam2.resize(d.m2);
        for (int k = 0; k < d.m1; ++k) {
            double s = std::sin(0.5 * std::numbers::pi * (k + 1) / (d.m1 + 1));
            d.lam1[k] = 4.0 * s * s / (g.h1() * g.h1());
        }
        for (int k = 0; k < d.m2; ++k) {
            double s = std::sin(0.5 * std::numbers::pi * (k + 1) / (d.m2 + 1));
            d.lam2[k] = 4.0 * s * s / (g.h2() * g.h2());
        }
        d.norm = 1.0 / (4.0 * (d.m1 + 1.0) * (d.m2 + 1.0));
        exact_ = g.unknown_count() == static_cast<std::size_t>(d.m1) * d.m2;
    }
    if (!d.fwd || !d.bwd)
        throw std::runtime_error("FFTW planning failed");
}

SpectralSolver::~SpectralSolver() = default;

void SpectralSolver::apply_symbol(const Vec& in, Vec& out, const std::function<double(double)>& m)
{
    const Grid& g = *grid_;
    Impl& d = *impl_;
    out.resize(g.size());
    if (g.is_periodic()) {
        const int nc = d.m1 / 2 + 1;
        std::copy(in.begin(), in.end(), d.real);
        fftw_execute(d.fwd);
        for (int j = 0; j < d.m2; ++j)
            for (int i = 0; i < nc; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * nc + i;
                const double lam = d.lam1[i] + d.lam2[j];
                const double mv = m(lam);
                const double f = std::isfinite(mv) ? mv * d.norm : 0.0;
                d.spec[k][0] *= f;
                d.spec[k][1] *= f;
            }
        fftw_execute(d.bwd);
        std::copy(d.real, d.real + g.size(), out.begin());
        return;
    }
    for (int j = 0; j < d.m2; ++j)
        for (int i = 0; i < d.m1; ++i) {
            const std::size_t k = g.index(i + 1, j + 1);
            d.real[static_cast<std::size_t>(j) * d.m1 + i] = g.unknown(k) ? in[k] : 0.0;
        }
    fftw_execute(d.fwd);
    for (int j = 0; j < d.m2; ++j)
        for (int i = 0; i < d.m1; ++i)
            d.real[static_cast<std::size_t>(j) * d.m1 + i] *= m(d.lam1[i] + d.lam2[j]) * d.norm;
    fftw_execute(d.bwd);
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < d.m2; ++j)
        for (int i = 0; i < d.m1; ++i) {
            const std::size_t k = g.index(i + 1, j + 1);
            if (g.unknown(k))
                out[k] = d.real[static_cast<std::size_t>(j) * d.m1 + i];
        }
}

void SpectralSolver::solve_shifted(const Vec& in, Vec& out, double c)
{
    apply_symbol(in, out, [c](double lam) { return 1.0 / (lam + c); });
}

} // namespace bilayer
