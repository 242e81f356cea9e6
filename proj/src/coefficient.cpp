#include "parahom/coefficient.hpp"

#include <string>

namespace parahom {

EllipticityMargins ellipticity_margins(const Matrix& a, double lambda) {
    const Matrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    Eigen::JacobiSVD<Matrix> svd(a);
    return {eig.eigenvalues().minCoeff() - lambda, 1.0 - svd.singularValues().maxCoeff()};
}

CoefficientField::CoefficientField(SpaceTimeField field, double lambda)
    : field_(std::move(field)), lambda_(lambda) {
    if (field_.rank() != Rank::matrix) throw DomainError("coefficient field must have matrix rank");
    if (!(lambda_ > 0.0 && lambda_ <= 1.0)) throw DomainError("lambda must lie in (0, 1]");
    const Grid& g = field_.grid();
    const int d = g.d;
    for (int r = 0; r < d && diagonal_; ++r)
        for (int c = 0; c < d && diagonal_; ++c) {
            if (r == c) continue;
            for (double v : field_.values(r * d + c))
                if (v != 0.0) {
                    diagonal_ = false;
                    break;
                }
        }

    if (diagonal_) {
        for (int r = 0; r < d; ++r)
            for (double v : field_.values(r * d + r))
                if (!(v >= lambda_ && v <= 1.0))
                    throw InvariantError("coefficient entry " + std::to_string(v) +
                                         " outside [lambda, 1]");
        return;
    }
    const std::size_t N = g.spatial_size();
    for (int t = 0; t < g.n_t; ++t)
        for (std::size_t x = 0; x < N; ++x) {
            const auto m = ellipticity_margins(at(t, x), lambda_);
            if (m.lower < -1e-14 || m.upper < -1e-14)
                throw InvariantError("coefficient field violates the ellipticity bounds");
        }
}

Matrix CoefficientField::at(int t, std::size_t x) const {
    const int d = field_.grid().d;
    Matrix m(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) m(r, c) = field_(r * d + c, t, x);
    return m;
}

CoefficientField CoefficientField::transposed() const {
    const int d = field_.grid().d;
    SpaceTimeField out(field_.grid(), Rank::matrix);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            auto src = field_.values(r * d + c);
            auto dst = out.values(c * d + r);
            std::copy(src.begin(), src.end(), dst.begin());
        }
    return CoefficientField(std::move(out), lambda_);
}

}  // namespace parahom
