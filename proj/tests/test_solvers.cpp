#include <cmath>
#include <cstring>
#include <numbers>

#include "doctest.h"
#include "parahom/ensemble.hpp"
#include "parahom/solvers.hpp"
#include "support.hpp"

using namespace parahom;

namespace {

const double kPi = std::numbers::pi;

CoefficientField constant_field(const Grid& g, const Matrix& m, double lambda = 0.25) {
    EnsembleSpec s;
    s.kind = EnsembleKind::constant;
    s.lambda = lambda;
    s.cells = 1;
    s.cells_t = 1;
    s.matrix.assign(m.data(), m.data() + m.size());
    // Eigen is column-major; the spec matrix is row-major.
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) s.matrix[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
    return generate(s, g);
}

CoefficientField two_phase_1d(const Grid& g) {
    EnsembleSpec s;
    s.kind = EnsembleKind::laminate;
    s.lambda = 0.25;
    s.cells = 2;
    s.cells_t = 1;
    s.values = {0.25, 1.0};
    return generate(s, g);
}

// Dirichlet data on a window sampled from fn(x, t), x from the center, t from the top.
SpaceTimeField window_data(const Grid& local, const std::function<double(std::span<const double>, double)>& fn) {
    return sample(local, Cylinder::centered(local), fn);
}

}  // namespace

TEST_CASE("solver config validation") {
    SolverConfig c;
    CHECK_NOTHROW(c.validate());
    c.tol = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = SolverConfig{};
    c.max_iter = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = SolverConfig{};
    c.theta = 0.2;
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("poisson_torus") {
    SUBCASE("zero right-hand side") {
        const Grid g = Grid::torus(2, 16, 4, 1.0, 0.01);
        std::vector<double> f(g.spatial_size(), 0.0);
        CHECK(test::max_abs(poisson_torus(g, f)) == 0.0);
    }
    SUBCASE("single cosine mode") {
        const Grid g = Grid::torus(2, 64, 4, 1.0, 0.01);
        std::vector<double> f(g.spatial_size());
        for (std::size_t x = 0; x < f.size(); ++x) f[x] = std::cos(2 * kPi * g.unravel(x)[0] * g.h);
        const auto psi = poisson_torus(g, f);
        const double mu = 4.0 / (g.h * g.h) * std::pow(std::sin(kPi * g.h), 2);
        double err = 0.0;
        for (std::size_t x = 0; x < f.size(); ++x) err = std::max(err, std::abs(psi[x] + f[x] / mu));
        CHECK(err <= 1e-14);
    }
    SUBCASE("round trip on random zero-mean data") {
        for (int d = 1; d <= 3; ++d) {
            const Grid g = Grid::torus(d, d == 3 ? 16 : 32, 4, 1.0, 0.01);
            SpaceTimeField f(g, Rank::scalar);
            test::fill_random(f, 40 + d);
            for (int t = 0; t < g.n_t; ++t) {
                auto s = f.slice(t);
                double m = 0.0;
                for (double v : s) m += v;
                m /= static_cast<double>(s.size());
                for (double& v : s) v -= m;
            }
            const auto back = laplacian(poisson_torus(f));
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < f.data().size(); ++i) {
                num += std::pow(back.data()[i] - f.data()[i], 2);
                den += std::pow(f.data()[i], 2);
            }
            CHECK(std::sqrt(num / den) <= 1e-12);
        }
    }
    SUBCASE("non-zero mean is rejected") {
        const Grid g = Grid::torus(2, 8, 4, 1.0, 0.01);
        std::vector<double> f(g.spatial_size(), 1.0);
        CHECK_THROWS_AS(poisson_torus(g, f), DomainError);
    }
}

TEST_CASE("cell problem with constant coefficients has zero corrector") {
    const Grid g = Grid::parabolic(2, 16, 16);
    Matrix m(2, 2);
    m << 0.7, 0.0, 0.0, 0.4;
    const auto a = constant_field(g, m);
    SolveStats st;
    for (int i = 0; i < 2; ++i) {
        const auto phi = parabolic_cell(a, i, SolverConfig{}, &st);
        CHECK(test::max_abs(phi.data()) == 0.0);
        CHECK(st.residual <= 1e-12);
    }
}

TEST_CASE("cell problem with time-only coefficients has zero corrector") {
    const Grid g = Grid::parabolic(2, 16, 16);
    EnsembleSpec s;
    s.kind = EnsembleKind::time_periodic;
    s.cells = 1;
    s.cells_t = 2;
    s.values = {0.25, 1.0};
    const auto a = generate(s, g);
    const auto phi = parabolic_cell(a, 0, SolverConfig{});
    CHECK(test::max_abs(phi.data()) == 0.0);
}

TEST_CASE("1D two-phase cell problem matches the quadrature oracle") {
    const Grid g = Grid::torus(1, 64, 64);
    const auto a = two_phase_1d(g);
    SolveStats st;
    const auto phi = parabolic_cell(a, 0, SolverConfig{}, &st);
    CHECK(st.residual <= 1e-8);
    const auto G = grad(phi);
    double err = 0.0;
    for (int t = 0; t < g.n_t; ++t)
        for (std::size_t x = 0; x < g.spatial_size(); ++x) {
            const double expected = a.entry(0, 0, t, x) == 0.25 ? 0.6 : -0.6;
            err = std::max(err, std::abs(G(0, t, x) - expected));
        }
    CHECK(err <= 1e-6);
}

TEST_CASE("Crank-Nicolson reaches the same stationary corrector") {
    const Grid g = Grid::torus(1, 32, 32);
    const auto a = two_phase_1d(g);
    SolverConfig cn;
    cn.theta = 0.5;
    const auto p1 = parabolic_cell(a, 0, SolverConfig{});
    const auto p2 = parabolic_cell(a, 0, cn);
    CHECK(test::max_abs_diff(p1.data(), p2.data()) <= 1e-9);
}

TEST_CASE("cell problem uniqueness from two initial states") {
    const Grid g = Grid::parabolic(2, 16, 32);
    EnsembleSpec s;
    s.cells = 4;
    s.cells_t = 4;
    s.seed = 3;
    const auto a = generate(s, g);
    SolverConfig cfg;
    std::vector<double> xi{1.0, 0.0};
    std::vector<double> start(g.spatial_size());
    for (std::size_t x = 0; x < start.size(); ++x) start[x] = std::sin(2 * kPi * g.unravel(x)[1] * g.h);
    const auto p1 = parabolic_cell(a, xi, cfg);
    const auto p2 = parabolic_cell(a, xi, cfg, nullptr, start);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p1.data().size(); ++i) {
        num += std::pow(p1.data()[i] - p2.data()[i], 2);
        den += std::pow(p1.data()[i], 2);
    }
    CHECK(std::sqrt(num / den) <= 10 * cfg.period_tol);
}

TEST_CASE("cell problem reports non-convergence") {
    const Grid g = Grid::parabolic(2, 16, 16);
    EnsembleSpec s;
    s.cells = 4;
    s.cells_t = 4;
    const auto a = generate(s, g);
    SolverConfig cfg;
    cfg.max_iter = 1;
    CHECK_THROWS_AS(parabolic_cell(a, 0, cfg), SolverError);
}

TEST_CASE("Dirichlet problem reproduces linear caloric functions") {
    const Grid host = Grid::parabolic(2, 32, 64);
    const auto a = constant_field(host, Matrix::Identity(2, 2), 1.0);
    const auto C = Cylinder::make(host, 0.25, {16, 16, 0}, 63);
    const Grid local = C.local_grid(host);
    const auto data = window_data(local, [](std::span<const double> x, double) { return x[0]; });
    SolveStats st;
    const auto u = parabolic_dirichlet(a, C, data, SolverConfig{}, &st);
    CHECK(test::max_abs_diff(u.data(), data.data()) <= 1e-10);
    CHECK(st.residual <= 1e-10);
}

TEST_CASE("Dirichlet problem converges on a quadratic caloric function") {
    auto error_at = [](int n) {
        const Grid host = Grid::parabolic(1, n, n * n / 16);
        const auto C = Cylinder::make(host, 0.25, {n / 2, 0, 0}, host.n_t - 1);
        const Grid local = C.local_grid(host);
        auto exact = [](std::span<const double> x, double t) { return x[0] * x[0] + 2 * t; };
        const auto data = window_data(local, exact);
        const auto u = parabolic_dirichlet(Matrix::Identity(1, 1), local, data, SolverConfig{});
        return test::max_abs_diff(u.data(), data.data());
    };
    const double e1 = error_at(32), e2 = error_at(64);
    // u_tt = 0 and u_xxxx = 0, so the scheme is exact up to solver tolerance.
    CHECK(e1 <= 1e-9);
    CHECK(e2 <= 1e-9);
}

TEST_CASE("Dirichlet boundary values are attained bit-exactly") {
    const Grid host = Grid::parabolic(2, 32, 64);
    EnsembleSpec s;
    s.cells = 8;
    s.cells_t = 4;
    const auto a = generate(s, host);
    const auto C = Cylinder::make(host, 0.25, {10, 20, 0}, 50);
    const Grid local = C.local_grid(host);
    auto data = window_data(local, [](std::span<const double> x, double t) {
        return std::sin(3 * x[0]) * std::cos(5 * x[1]) + t;
    });
    const auto u = parabolic_dirichlet(a, C, data, SolverConfig{});
    const auto mask = boundary_mask(local);
    bool exact = true;
    for (int t = 0; t < local.n_t; ++t)
        for (std::size_t x = 0; x < local.spatial_size(); ++x)
            if (mask[x] || t == 0) exact = exact && std::memcmp(&u.slice(t)[x], &data.slice(t)[x], sizeof(double)) == 0;
    CHECK(exact);
}

TEST_CASE("energy dissipation and maximum principle") {
    const Grid host = Grid::parabolic(2, 32, 64);
    EnsembleSpec s;
    s.cells = 8;
    s.cells_t = 4;
    const auto a = generate(s, host);
    const auto C = Cylinder::make(host, 0.25, {16, 16, 0}, 63);
    const Grid local = C.local_grid(host);
    SpaceTimeField data(local, Rank::scalar);
    test::fill_random(data, 77);
    const auto mask = boundary_mask(local);
    for (int t = 1; t < local.n_t; ++t)
        for (std::size_t x = 0; x < local.spatial_size(); ++x) data(0, t, x) = 0.0;
    for (std::size_t x = 0; x < local.spatial_size(); ++x)
        if (mask[x]) data(0, 0, x) = 0.0;
    const auto u = parabolic_dirichlet(a, C, data, SolverConfig{});
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int t = 0; t < local.n_t; ++t) {
        double e = 0.0;
        for (double v : u.slice(t)) e += v * v;
        monotone = monotone && e <= prev * (1 + 1e-12);
        prev = e;
    }
    CHECK(monotone);
    const double lo = *std::min_element(data.data().begin(), data.data().end());
    const double hi = *std::max_element(data.data().begin(), data.data().end());
    for (double v : u.data()) {
        CHECK(v >= lo - 1e-9);
        CHECK(v <= hi + 1e-9);
    }
}

TEST_CASE("non-symmetric coefficients converge through skew splitting") {
    const Grid host = Grid::parabolic(2, 32, 64);
    Matrix m(2, 2);
    m << 0.6, 0.2, -0.2, 0.5;
    EnsembleSpec s;
    s.kind = EnsembleKind::constant;
    s.lambda = 0.25;
    s.matrix = {0.6, 0.2, -0.2, 0.5};
    const auto a = generate(s, host);
    CHECK_FALSE(a.diagonal());
    const auto C = Cylinder::make(host, 0.25, {16, 16, 0}, 63);
    const Grid local = C.local_grid(host);
    const auto data = window_data(local, [](std::span<const double> x, double t) {
        return std::exp(-t) * std::sin(2 * x[0] + x[1]);
    });
    const auto u = parabolic_dirichlet(a, C, data, SolverConfig{});
    // The per-step solves are relative to |c0 u|, which dominates |u_t| by about 1/(tau * rate).
    CHECK(caloric_residual(CoefficientSampler::window(a, local), u) <= 1e-6);
}

TEST_CASE("tiled sampler repeats the small torus") {
    const Grid small = Grid::parabolic(2, 8, 8);
    EnsembleSpec s;
    s.cells = 4;
    s.cells_t = 2;
    const auto a = generate(s, small);
    const Grid big = Grid::parabolic(2, 32, 8);
    const auto t = CoefficientSampler::tiled(a, big);
    CHECK(t.entry(0, 0, 3, big.ravel({9, 17, 0})) == a.entry(0, 0, 3, small.ravel({1, 1, 0})));
    CHECK_THROWS_AS(CoefficientSampler::tiled(a, Grid::parabolic(2, 12, 8)), DomainError);
}
