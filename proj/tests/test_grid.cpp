#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <numbers>
#include <set>

#include "doctest.h"
#include "parahom/grid.hpp"
#include "support.hpp"

using namespace parahom;
namespace fs = std::filesystem;

namespace {

const double kPi = std::numbers::pi;

SpaceTimeField from_function(const Grid& g, const std::function<double(const Index&, int)>& fn) {
    SpaceTimeField f(g, Rank::scalar);
    for (int t = 0; t < g.n_t; ++t)
        for (std::size_t x = 0; x < g.spatial_size(); ++x) f(0, t, x) = fn(g.unravel(x), t);
    return f;
}

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("parahom_test_" + name);
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_NOTHROW(Grid::torus(2, 8, 8).validate());
    CHECK_THROWS_AS(Grid::torus(4, 8, 8).validate(), DomainError);
    CHECK_THROWS_AS(Grid::torus(2, 3, 8).validate(), DomainError);
    CHECK_THROWS_AS(Grid::torus(2, 8, 3).validate(), DomainError);
    // tau = 1/4 > h = 1/8 breaks parabolic consistency
    CHECK_THROWS_AS(Grid::torus(1, 8, 4).validate(), DomainError);
    const Grid p = Grid::parabolic(2, 32, 16);
    CHECK(p.tau == doctest::Approx(1.0 / 1024));
    CHECK(p.period() == doctest::Approx(16.0 / 1024));
}

TEST_CASE("ravel and unravel are inverse") {
    const Grid g = Grid::torus(3, 5, 4, 1.0, 0.1);
    for (std::size_t x = 0; x < g.spatial_size(); ++x) CHECK(g.ravel(g.unravel(x)) == x);
    CHECK(g.ravel_wrapped({-1, 5, 7}) == g.ravel({4, 0, 2}));
    CHECK(g.wrap_t(-1) == 3);
}

TEST_CASE("grad and div of constants vanish exactly") {
    for (int d = 1; d <= 3; ++d) {
        const Grid g = Grid::torus(d, 6, 4, 1.0, 0.1);
        SpaceTimeField u(g, Rank::scalar);
        for (double& v : u.data()) v = 5.0;
        CHECK(test::max_abs(grad(u).data()) == 0.0);
        SpaceTimeField F(g, Rank::vector);
        for (int k = 0; k < d; ++k)
            for (double& v : F.values(k)) v = 0.3 * (k + 1);
        CHECK(test::max_abs(div(F).data()) == 0.0);
    }
}

TEST_CASE("grad of a sine is the forward difference quotient") {
    const Grid g = Grid::torus(2, 64, 4, 1.0, 1.0 / 64);
    const double h = g.h;
    const auto u = from_function(g, [&](const Index& j, int) { return std::sin(2 * kPi * j[0] * h); });
    const auto G = grad(u);
    double formula = 0.0, midpoint = 0.0, node = 0.0;
    for (std::size_t x = 0; x < g.spatial_size(); ++x) {
        const double x1 = g.unravel(x)[0] * h;
        const double v = G(0, 1, x);
        formula = std::max(formula, std::abs(v - (std::sin(2 * kPi * (x1 + h)) - std::sin(2 * kPi * x1)) / h));
        midpoint = std::max(midpoint, std::abs(v - 2 * kPi * std::cos(2 * kPi * (x1 + h / 2))));
        node = std::max(node, std::abs(v - 2 * kPi * std::cos(2 * kPi * x1)));
        CHECK(G(1, 1, x) == 0.0);
    }
    CHECK(formula <= 1e-12);
    // The difference quotient is a midpoint derivative: within 2 pi h there,
    // and within the first-order bound 2 pi^2 h at the nodes.
    CHECK(midpoint <= 2 * kPi * h);
    CHECK(node <= 2 * kPi * kPi * h);
}

TEST_CASE("div grad of a single Fourier mode is an eigenvector") {
    const Grid g = Grid::torus(2, 64, 4, 1.0, 1.0 / 64);
    const double h = g.h;
    const auto u = from_function(g, [&](const Index& j, int) { return std::sin(2 * kPi * j[0] * h); });
    const auto L = div(grad(u));
    const double mu = 4.0 / (h * h) * std::pow(std::sin(kPi * h), 2);
    double err = 0.0;
    for (std::size_t i = 0; i < u.data().size(); ++i) err = std::max(err, std::abs(L.data()[i] + mu * u.data()[i]));
    CHECK(err <= 1e-9 * mu);
}

TEST_CASE("discrete duality over 100 random periodic fields") {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 3;
        const Grid g = Grid::torus(d, d == 3 ? 6 : 12, 4, 1.0, 0.1);
        SpaceTimeField u(g, Rank::scalar), F(g, Rank::vector);
        test::fill_random(u, 1000 + trial);
        test::fill_random(F, 2000 + trial);
        const auto Gu = grad(u);
        const auto D = div(F);
        const double lhs = inner(Gu, F), rhs = -inner(u, D);
        const double scale = std::sqrt(inner(Gu, Gu) * inner(F, F));
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    CHECK(worst <= 1e-13);
}

TEST_CASE("window grids use zero extension and keep duality") {
    Grid g = Grid::torus(2, 7, 4, 1.0, 0.1);
    g.periodic = false;
    SpaceTimeField u(g, Rank::scalar), F(g, Rank::vector);
    test::fill_random(u, 5);
    test::fill_random(F, 6);
    const auto Gu = grad(u);
    for (int t = 0; t < g.n_t; ++t)
        for (std::size_t x = 0; x < g.spatial_size(); ++x) {
            const Index j = g.unravel(x);
            if (j[0] == g.n - 1) CHECK(Gu(0, t, x) == 0.0);
            if (j[1] == g.n - 1) CHECK(Gu(1, t, x) == 0.0);
        }
    const double lhs = inner(Gu, F), rhs = -inner(u, div(F));
    CHECK(std::abs(lhs - rhs) <= 1e-13 * std::sqrt(inner(Gu, Gu) * inner(F, F)));
}

TEST_CASE("cylinder averages") {
    SUBCASE("constant") {
        const Grid g = Grid::parabolic(2, 32, 64);
        SpaceTimeField f(g, Rank::scalar);
        for (double& v : f.data()) v = 2.5;
        const auto C = Cylinder::make(g, 0.25, {16, 16, 0}, 63);
        CHECK(cylinder_average(f, C)[0] == doctest::Approx(2.5).epsilon(1e-14));
        CHECK(cell_average(f, C)[0] == doctest::Approx(2.5).epsilon(1e-14));
    }
    SUBCASE("odd symmetry") {
        const Grid g = Grid::parabolic(2, 32, 64);
        const auto C = Cylinder::make(g, 0.25, {16, 16, 0}, 63);
        const auto f = from_function(g, [&](const Index& j, int) { return (j[0] - 16) * g.h; });
        CHECK(std::abs(cylinder_average(f, C)[0]) <= 1e-15);
    }
    SUBCASE("x^2 on the unit box in 1D") {
        const Grid g = Grid::parabolic(1, 256, 64, 1.0, 4.0);
        const auto C = Cylinder::make(g, 1.0, {128, 0, 0}, 63);
        CHECK(C.half_width == 64);
        const auto f = from_function(g, [&](const Index& j, int) {
            const double x = (j[0] - 128) * g.h;
            return x * x;
        });
        CHECK(std::abs(cylinder_average(f, C)[0] - 1.0 / 3.0) <= 1e-3);
    }
    SUBCASE("slice average of a time function") {
        const Grid g = Grid::parabolic(2, 32, 64);
        const auto f = from_function(g, [&](const Index&, int t) { return t * g.tau; });
        const auto C = Cylinder::make(g, 0.25, {16, 16, 0}, 63);
        CHECK(slice_average(f, C, 40)[0] == doctest::Approx(40 * g.tau).epsilon(1e-14));
    }
    SUBCASE("full torus slice of a sine") {
        const Grid g = Grid::parabolic(2, 32, 8);
        const auto f = from_function(g, [&](const Index& j, int) { return std::sin(2 * kPi * j[0] * g.h); });
        Cylinder C = Cylinder::make(g, 0.5, {0, 0, 0}, 3);
        CHECK(C.half_width == 16);
        CHECK(std::abs(slice_average(f, C, 3)[0]) <= 1e-12);
    }
}

TEST_CASE("cylinder nesting and measure ratio") {
    const Grid g = Grid::parabolic(2, 64, 1024);
    const Index c{32, 32, 0};
    const auto big = Cylinder::make(g, 0.25, c, 1023);
    const auto small = big.shrunk(g, 0.125);
    CHECK(big.cell_count(2) == 16 * small.cell_count(2));
    std::set<std::pair<int, std::size_t>> inside;
    for_each_node(g, big, [&](int t, std::size_t x, double, const Index&, int) { inside.insert({t, x}); });
    bool nested = true;
    for_each_node(g, small, [&](int t, std::size_t x, double, const Index&, int) {
        nested = nested && inside.count({t, x}) == 1;
    });
    CHECK(nested);
    // Nonnegative density: the small average is bounded by the measure ratio
    // times the big average.
    SpaceTimeField f(g, Rank::scalar);
    test::fill_random(f, 9);
    for (double& v : f.data()) v = v * v;
    const double ratio = static_cast<double>(big.cell_count(2)) / static_cast<double>(small.cell_count(2));
    CHECK(cell_average(f, small)[0] <= ratio * cell_average(f, big)[0]);
}

TEST_CASE("cylinder fit checks") {
    Grid g = Grid::parabolic(2, 16, 16);
    CHECK_THROWS_AS(Cylinder::make(g, 0.6, {8, 8, 0}, 15).check_fits(g), DomainError);
    CHECK_THROWS_AS(Cylinder::make(g, 0.01, {8, 8, 0}, 15), DomainError);
    g.periodic = false;
    CHECK_THROWS_AS(Cylinder::make(g, 0.25, {2, 8, 0}, 15).check_fits(g), DomainError);
    const auto C = Cylinder::make(g, 0.125, {8, 8, 0}, 15);
    const Grid local = C.local_grid(g);
    CHECK(local.n == 5);
    CHECK(local.n_t == C.levels + 1);
    CHECK(local.origin[0] == 6);
    const auto back = Cylinder::centered(local);
    CHECK(back.half_width == 2);
    CHECK(back.levels == C.levels);
}

TEST_CASE("restrict_to samples the torus under a window") {
    const Grid g = Grid::parabolic(2, 16, 16);
    SpaceTimeField f(g, Rank::vector);
    test::fill_random(f, 3);
    const auto C = Cylinder::make(g, 0.125, {1, 15, 0}, 2);
    const Grid w = C.local_grid(g);
    const auto r = restrict_to(f, w);
    CHECK(r(1, 0, w.ravel({0, 0, 0})) == f(1, g.wrap_t(2 - C.levels), g.ravel_wrapped({-1, 13, 0})));
}

TEST_CASE("field files round trip bit-exactly") {
    const Grid g = Grid::torus(3, 5, 4, 1.0, 0.1);
    for (Rank r : {Rank::scalar, Rank::vector, Rank::matrix, Rank::tensor3}) {
        SpaceTimeField f(g, r);
        test::fill_random(f, static_cast<std::uint64_t>(r) + 11);
        const auto p = temp_path("roundtrip.pshf");
        write_field(f, p);
        const auto back = read_field(p, g);
        CHECK(back.rank() == r);
        CHECK(back.grid().same_geometry(g));
        CHECK(std::memcmp(back.data().data(), f.data().data(), f.data().size() * sizeof(double)) == 0);
        fs::remove(p);
    }
}

TEST_CASE("field file interleaves components innermost") {
    const Grid g = Grid::torus(2, 4, 4, 1.0, 0.25);
    SpaceTimeField f(g, Rank::vector);
    f(0, 0, 0) = 1.5;
    f(1, 0, 0) = -2.5;
    f(0, 0, 1) = 3.5;
    const auto p = temp_path("layout.pshf");
    write_field(f, p);
    std::ifstream is(p, std::ios::binary);
    char header[24];
    is.read(header, 24);
    CHECK(std::string(header, 4) == "PSHF");
    double v[3];
    is.read(reinterpret_cast<char*>(v), sizeof v);
    CHECK(v[0] == 1.5);
    CHECK(v[1] == -2.5);
    CHECK(v[2] == 3.5);
    fs::remove(p);
}

TEST_CASE("field file errors") {
    const Grid g = Grid::torus(1, 8, 4, 1.0, 0.1);
    SpaceTimeField f(g, Rank::scalar);
    const auto p = temp_path("bad.pshf");
    write_field(f, p);
    std::string bytes;
    {
        std::ifstream is(p, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(is), {});
    }
    auto write_bytes = [&](const std::string& s) {
        std::ofstream os(p, std::ios::binary | std::ios::trunc);
        os.write(s.data(), static_cast<std::streamsize>(s.size()));
    };
    SUBCASE("wrong magic") {
        auto b = bytes;
        b[0] = 'X';
        write_bytes(b);
        CHECK_THROWS_WITH_AS(read_field(p), doctest::Contains("magic"), FieldFormatError);
    }
    SUBCASE("truncated payload") {
        write_bytes(bytes.substr(0, bytes.size() - 8));
        CHECK_THROWS_WITH_AS(read_field(p), doctest::Contains("truncated"), FieldFormatError);
    }
    SUBCASE("version mismatch") {
        auto b = bytes;
        b[4] = 2;
        write_bytes(b);
        CHECK_THROWS_WITH_AS(read_field(p), doctest::Contains("version"), FieldFormatError);
    }
    SUBCASE("malformed header") {
        auto b = bytes;
        b[8] = 9;
        write_bytes(b);
        CHECK_THROWS_AS(read_field(p), FieldFormatError);
    }
    fs::remove(p);
}
