#include "parahom/kernels.hpp"

namespace parahom::kernels {
namespace {

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(const double* x, double beta, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void scaled_diff(const double* a, const double* b, double scale, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = scale * (a[i] - b[i]);
}

void add_scaled_diff(const double* a, const double* b, double scale, double* out,
                     std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += scale * (a[i] - b[i]);
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axis_flux(const double* uc, const double* up, const double* um, const double* wc,
               const double* wm, double scale, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        y[i] += scale * (wc[i] * (uc[i] - up[i]) - wm[i] * (um[i] - uc[i]));
}

}  // namespace

const Table& scalar_table() {
    static const Table table{"scalar", dot, axpy, xpby, scaled_diff, add_scaled_diff, mul,
                             axis_flux};
    return table;
}

}  // namespace parahom::kernels
