#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "parahom/parallel.hpp"
#include "parahom/solvers.hpp"

namespace parahom {
namespace {
// FFTW planning is not thread-safe; execution with new-array functions is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct PoissonTorus::Impl {
    Grid g;
    std::size_t n_real = 0, n_complex = 0;
    std::vector<double> inv_symbol;  // 1 / (symbol * n_real), 0 for the zero mode
    fftw_plan forward = nullptr, backward = nullptr;
};

PoissonTorus::PoissonTorus(const Grid& g) : impl_(std::make_unique<Impl>()) {
    if (!g.periodic) throw DomainError("Poisson solver needs a periodic grid");
    Impl& p = *impl_;
    p.g = g;
    p.n_real = g.spatial_size();
    const std::size_t half = static_cast<std::size_t>(g.n / 2 + 1);
    p.n_complex = p.n_real / static_cast<std::size_t>(g.n) * half;

    p.inv_symbol.resize(p.n_complex);
    const double scale = 4.0 / (g.h * g.h);
    for (std::size_t idx = 0; idx < p.n_complex; ++idx) {
        std::size_t rest = idx / half;
        double s = std::pow(std::sin(std::numbers::pi * static_cast<double>(idx % half) / g.n), 2);
        for (int k = 1; k < g.d; ++k) {
            s += std::pow(std::sin(std::numbers::pi * static_cast<double>(rest % static_cast<std::size_t>(g.n)) / g.n), 2);
            rest /= static_cast<std::size_t>(g.n);
        }
        p.inv_symbol[idx] = idx == 0 ? 0.0 : 1.0 / (-scale * s * static_cast<double>(p.n_real));
    }

    int dims[3] = {g.n, g.n, g.n};
    std::lock_guard lock(plan_mutex());
    double* in = fftw_alloc_real(p.n_real);
    fftw_complex* out = fftw_alloc_complex(p.n_complex);
    p.forward = fftw_plan_dft_r2c(g.d, dims, in, out, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r(g.d, dims, out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (!p.forward || !p.backward) throw SolverError("FFTW planning failed");
}

PoissonTorus::~PoissonTorus() {
    std::lock_guard lock(plan_mutex());
    if (impl_->forward) fftw_destroy_plan(impl_->forward);
    if (impl_->backward) fftw_destroy_plan(impl_->backward);
}

void PoissonTorus::solve(std::span<const double> f, std::span<double> out) const {
    const Impl& p = *impl_;
    if (f.size() != p.n_real || out.size() != p.n_real) throw DomainError("Poisson slice has wrong size");
    double sum = 0.0, fmax = 0.0;
    for (double v : f) {
        sum += v;
        fmax = std::max(fmax, std::abs(v));
    }
    const double mean = sum / static_cast<double>(p.n_real);
    if (std::abs(mean) > 1e-8 * std::max(1.0, fmax))
        throw DomainError("Poisson right-hand side has non-zero mean " + std::to_string(mean));

    double* buf = fftw_alloc_real(p.n_real);
    fftw_complex* spec = fftw_alloc_complex(p.n_complex);
    for (std::size_t i = 0; i < p.n_real; ++i) buf[i] = f[i] - mean;
    fftw_execute_dft_r2c(p.forward, buf, spec);
    for (std::size_t i = 0; i < p.n_complex; ++i) {
        spec[i][0] *= p.inv_symbol[i];
        spec[i][1] *= p.inv_symbol[i];
    }
    fftw_execute_dft_c2r(p.backward, spec, buf);
    double m = 0.0;
    for (std::size_t i = 0; i < p.n_real; ++i) m += buf[i];
    m /= static_cast<double>(p.n_real);
    for (std::size_t i = 0; i < p.n_real; ++i) out[i] = buf[i] - m;
    fftw_free(buf);
    fftw_free(spec);
}

std::vector<double> poisson_torus(const Grid& g, std::span<const double> f) {
    PoissonTorus solver(g);
    std::vector<double> out(g.spatial_size());
    solver.solve(f, out);
    return out;
}

SpaceTimeField poisson_torus(const SpaceTimeField& f) {
    if (f.rank() != Rank::scalar) throw DomainError("Poisson solve expects a scalar field");
    const Grid& g = f.grid();
    PoissonTorus solver(g);
    SpaceTimeField out(g, Rank::scalar);
    parallel_for(static_cast<std::size_t>(g.n_t), [&](std::size_t t) {
        solver.solve(f.slice(static_cast<int>(t)), out.slice(static_cast<int>(t)));
    });
    return out;
}

}  // namespace parahom
