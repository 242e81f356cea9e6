#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "parahom/coefficient.hpp"

namespace parahom {

// Generators for uniformly elliptic space-time coefficient fields on a torus.
// A periodic field together with the uniform measure over its shifts is a
// stationary ergodic ensemble, so every ensemble average becomes a torus mean.
enum class EnsembleKind { checkerboard, laminate, time_periodic, constant, smoothed_noise };

EnsembleKind parse_ensemble_kind(std::string_view name);
std::string to_string(EnsembleKind kind);

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::checkerboard;
    double lambda = 0.25;
    int cells = 8;    // cells per period along each spatial axis
    int cells_t = 4;  // cells per time period
    std::uint64_t seed = 42;
    std::vector<double> values{0.25, 1.0};
    // constant kind only: row-major d x d matrix; empty means diag(values).
    std::vector<double> matrix;

    void validate(const Grid& grid) const;
};

// checkerboard: iid diagonal entries per space-time cell, uniform over values.
// laminate: depends on x_1 only; cell c gets diagonal entry j = values[(c+j) % |values|].
// time_periodic: a(t) = values[c_t % |values|] I, spatially constant.
// constant: the given matrix everywhere.
// smoothed_noise: white noise box-filtered on the cell scale, thresholded at
//   zero into the two-phase field {values.front(), values.back()} I.
CoefficientField generate(const EnsembleSpec& spec, const Grid& grid);

// Periodic translation: result(x, t) = a(x + dx, t + dt).
CoefficientField shift(const CoefficientField& a, const Index& dx, int dt);

}  // namespace parahom
