#pragma once

#include <Eigen/Dense>

#include "parahom/grid.hpp"

namespace parahom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Matrix-valued coefficient a(x, t) on a torus with ellipticity floor lambda:
// lambda |xi|^2 <= xi . a xi and |a xi| <= |xi| at every sample.
//
// Time level k carries the coefficient of the step interval (t_{k-1}, t_k],
// which is the value an implicit Euler step ending at t_k sees.
class CoefficientField {
public:
    // Validates rank and the ellipticity bounds; throws InvariantError.
    CoefficientField(SpaceTimeField field, double lambda);

    const SpaceTimeField& field() const { return field_; }
    const Grid& grid() const { return field_.grid(); }
    double lambda() const { return lambda_; }
    // True when every off-diagonal entry is exactly zero.
    bool diagonal() const { return diagonal_; }

    double entry(int row, int col, int t, std::size_t x) const {
        return field_(row * field_.grid().d + col, t, x);
    }
    Matrix at(int t, std::size_t x) const;
    std::span<const double> entries(int row, int col, int t) const {
        return field_.slice(t, row * field_.grid().d + col);
    }

    CoefficientField transposed() const;

private:
    SpaceTimeField field_;
    double lambda_;
    bool diagonal_ = true;
};

// Worst-case margins of the ellipticity bounds for one matrix:
// lower = min eig(sym(a)) - lambda, upper = 1 - |a|_2.
struct EllipticityMargins {
    double lower;
    double upper;
};
EllipticityMargins ellipticity_margins(const Matrix& a, double lambda);

}  // namespace parahom
