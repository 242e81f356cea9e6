#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops. Each backend (scalar reference, AVX2, NEON)
// fills one Table; the active table is picked once at startup from the CPU
// features, or forced with PARAHOM_SIMD=scalar|avx2|neon.
//
// Elementwise kernels are bit-identical across backends (no FMA contraction,
// same operation order). Reductions (dot) differ only in summation order.

namespace parahom::kernels {

struct Table {
    const char* name;

    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y = x + beta * y
    void (*xpby)(const double* x, double beta, double* y, std::size_t n);
    // out = scale * (a - b)
    void (*scaled_diff)(const double* a, const double* b, double scale, double* out,
                        std::size_t n);
    // out += scale * (a - b)
    void (*add_scaled_diff)(const double* a, const double* b, double scale, double* out,
                            std::size_t n);
    // out = a * b
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // One axis of the flux-form stencil -div(w grad u), written for a contiguous run:
    //   y += scale * (wc * (uc - up) - wm * (um - uc))
    // with up/um the forward/backward neighbours and wc/wm the edge weights.
    void (*axis_flux)(const double* uc, const double* up, const double* um, const double* wc,
                      const double* wm, double scale, double* y, std::size_t n);
};

const Table& scalar_table();
// nullptr when the backend was not compiled in or the CPU lacks the feature.
const Table* avx2_table();
const Table* neon_table();

const Table& active();
// Force a backend by name ("scalar", "avx2", "neon", "auto"). Returns false if
// the backend is unavailable; the active table is then left unchanged.
bool select(std::string_view name);

}  // namespace parahom::kernels
