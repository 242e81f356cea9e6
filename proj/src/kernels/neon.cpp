#include "parahom/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace parahom::kernels {
namespace {

double dot(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    acc0 = vaddq_f64(acc0, acc1);
    double s = vgetq_lane_f64(acc0, 0) + vgetq_lane_f64(acc0, 1);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(const double* x, double beta, double* y, std::size_t n) {
    const float64x2_t vb = vdupq_n_f64(beta);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(vb, vld1q_f64(y + i))));
    for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void scaled_diff(const double* a, const double* b, double scale, double* out, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(scale);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vmulq_f64(vs, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i))));
    for (; i < n; ++i) out[i] = scale * (a[i] - b[i]);
}

void add_scaled_diff(const double* a, const double* b, double scale, double* out,
                     std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(scale);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vmulq_f64(vs, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(out + i), d));
    }
    for (; i < n; ++i) out[i] += scale * (a[i] - b[i]);
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axis_flux(const double* uc, const double* up, const double* um, const double* wc,
               const double* wm, double scale, double* y, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(scale);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t c = vld1q_f64(uc + i);
        const float64x2_t fwd = vmulq_f64(vld1q_f64(wc + i), vsubq_f64(c, vld1q_f64(up + i)));
        const float64x2_t bwd = vmulq_f64(vld1q_f64(wm + i), vsubq_f64(vld1q_f64(um + i), c));
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(vs, vsubq_f64(fwd, bwd))));
    }
    for (; i < n; ++i)
        y[i] += scale * (wc[i] * (uc[i] - up[i]) - wm[i] * (um[i] - uc[i]));
}

}  // namespace

const Table* neon_table() {
    static const Table table{"neon", dot, axpy, xpby, scaled_diff, add_scaled_diff, mul,
                             axis_flux};
    return &table;
}

}  // namespace parahom::kernels

#else

namespace parahom::kernels {
const Table* neon_table() { return nullptr; }
}  // namespace parahom::kernels

#endif
