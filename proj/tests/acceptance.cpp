// Acceptance run: one [PASS]/[FAIL] line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "parahom/corrector.hpp"
#include "parahom/ensemble.hpp"
#include "parahom/excess.hpp"
#include "parahom/run.hpp"
#include "parahom/twoscale.hpp"

using namespace parahom;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " FAILED(" << what << ")";
        }
    }
};

double max_abs(const std::vector<SpaceTimeField>& fs) {
    double m = 0.0;
    for (const auto& f : fs)
        for (double v : f.data()) m = std::max(m, std::abs(v));
    return m;
}

EnsembleSpec spec(EnsembleKind kind, int cells, int cells_t, std::uint64_t seed = 42) {
    EnsembleSpec s;
    s.kind = kind;
    s.lambda = 0.25;
    s.cells = cells;
    s.cells_t = cells_t;
    s.seed = seed;
    s.values = {0.25, 1.0};
    return s;
}

// c + xi.x + phi_xi on a window, x from the window center.
SpaceTimeField family_member(const ExtendedCorrector& c, const Grid& w, double c0, const std::vector<double>& xi) {
    const SpaceTimeField phi = restrict_to(c.phi_xi(xi), w);
    SpaceTimeField u(w, Rank::scalar);
    const int mid = (w.n - 1) / 2;
    for (int t = 0; t < w.n_t; ++t)
        for (std::size_t x = 0; x < w.spatial_size(); ++x) {
            const Index j = w.unravel(x);
            double v = c0 + phi(0, t, x);
            for (int k = 0; k < w.d; ++k) v += xi[static_cast<std::size_t>(k)] * (j[k] - mid) * w.h;
            u(0, t, x) = v;
        }
    return u;
}

struct Small {
    CoefficientField a;
    ExtendedCorrector c;
};

// 2D checkerboard on a 32^2 x 64 torus shared by the excess criteria.
const Small& small_checkerboard() {
    static const Small s = [] {
        CoefficientField a = generate(spec(EnsembleKind::checkerboard, 4, 4), Grid::parabolic(2, 32, 64));
        ExtendedCorrector c = build_corrector(a, SolverConfig{}, {.potentials = false});
        return Small{std::move(a), std::move(c)};
    }();
    return s;
}

const Cylinder small_cylinder(double R) { return Cylinder::make(small_checkerboard().a.grid(), R, {8, 8, 0}, 40); }

SpaceTimeField small_caloric(double R, std::uint64_t seed) {
    const Small& s = small_checkerboard();
    const Cylinder C = small_cylinder(R);
    const Grid w = C.local_grid(s.a.grid());
    return parabolic_dirichlet(s.a, C, random_boundary_data(w, C, 3, seed), SolverConfig{});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void ac1(Outcome& o) {
    const Grid g = Grid::parabolic(2, 64, 64);
    EnsembleSpec s = spec(EnsembleKind::constant, 1, 1);
    s.matrix = {0.7, 0.1, 0.1, 0.4};
    const auto t0 = std::chrono::steady_clock::now();
    const CoefficientField a = generate(s, g);
    const ExtendedCorrector c = build_corrector(a, SolverConfig{});
    const double secs = seconds_since(t0);
    Matrix A(2, 2);
    A << 0.7, 0.1, 0.1, 0.4;
    const double err = (c.ahom.ahom - A).cwiseAbs().maxCoeff();
    double zeta = 0.0;
    for (const auto& z : c.zeta)
        for (double v : z) zeta = std::max(zeta, std::abs(v));
    const double fields = std::max({max_abs(c.phi), max_abs(c.psi), max_abs(c.sigma), zeta});
    o.detail << "|ahom - A|max=" << err << " max|phi,psi,sigma,zeta|=" << fields << " time=" << secs << "s";
    o.require(err <= 1e-10, "ahom");
    o.require(fields <= 1e-10, "corrector");
    o.require(secs < 5.0, "runtime");
}

void ac2(Outcome& o) {
    for (int n : {64, 256}) {
        const CoefficientField a = generate(spec(EnsembleKind::laminate, 2, 1), Grid::torus(1, n, 4));
        const ExtendedCorrector c = build_corrector(a, SolverConfig{}, {.potentials = false});
        const double err = std::abs(c.ahom.ahom(0, 0) - 0.4);
        const SpaceTimeField g = grad(c.phi[0]);
        double profile = 0.0;
        for (int t = 0; t < g.grid().n_t; ++t)
            for (std::size_t x = 0; x < g.grid().spatial_size(); ++x) {
                const double expect = a.entry(0, 0, t, x) == 0.25 ? 0.6 : -0.6;
                profile = std::max(profile, std::abs(g(0, t, x) - expect));
            }
        o.detail << "n=" << n << ": |ahom-0.4|=" << err << " |dphi-(+-0.6)|max=" << profile << "  ";
        o.require(err <= (n == 64 ? 1e-3 : 1e-6), "ahom n=" + std::to_string(n));
        o.require(profile <= 1e-3, "profile n=" + std::to_string(n));
    }
}

void ac3(Outcome& o) {
    const CoefficientField a = generate(spec(EnsembleKind::laminate, 2, 1), Grid::torus(2, 128, 4));
    const ExtendedCorrector c = build_corrector(a, SolverConfig{}, {.potentials = false});
    Matrix expect(2, 2);
    expect << 0.4, 0.0, 0.0, 0.625;  // harmonic mean of alpha, arithmetic mean of beta
    const double err = (c.ahom.ahom - expect).cwiseAbs().maxCoeff();
    o.detail << "ahom=[" << c.ahom.ahom(0, 0) << " " << c.ahom.ahom(0, 1) << "; " << c.ahom.ahom(1, 0) << " "
             << c.ahom.ahom(1, 1) << "] err=" << err;
    o.require(err <= 1e-3, "ahom");
}

void ac4(Outcome& o) {
    const Grid g = Grid::torus(2, 16, 16, 1.0, 1.0);
    const CoefficientField a = generate(spec(EnsembleKind::time_periodic, 1, 2), g);
    const ExtendedCorrector c = build_corrector(a, SolverConfig{});
    const double err = std::max(std::abs(c.ahom.ahom(0, 0) - 0.625), std::abs(c.ahom.ahom(1, 1) - 0.625));
    const double half = c.zeta[0][static_cast<std::size_t>(2 * (g.n_t / 2))];
    const double end = std::max(std::abs(c.zeta_period_end(0, 0)), std::abs(c.zeta_period_end(1, 1)));
    o.detail << "|ahom-0.625|=" << err << " zeta11(T/2)=" << half << " |zeta(T)|=" << end;
    o.require(err <= 1e-8, "ahom");
    o.require(std::abs(half + 0.1875) <= 1e-8, "half period");
    o.require(end <= 1e-10, "full period");
}

void ac5(Outcome& o) {
    const CoefficientField a = generate(spec(EnsembleKind::checkerboard, 8, 4), Grid::parabolic(2, 64, 64));
    const ExtendedCorrector c = build_corrector(a, SolverConfig{});
    const IdentityReport r = verify(a, c);
    const auto& skew = r.item("sigma_skew");
    const auto& div = r.item("sigma_divergence");
    const auto& eq = r.item("corrector_equation");
    const auto m = c.ahom.margins(100, 11);
    o.detail << "sigma_skew=" << skew.value << " div_identity=" << div.value << " corrector_eq=" << eq.value
             << " margins(lower,upper)=(" << m.lower << ", " << m.upper << ")";
    o.require(skew.value == 0.0, "skew");
    o.require(div.value <= 1e-10, "divergence identity");
    o.require(eq.value <= 1e-8, "corrector equation");
    o.require(m.lower > 0.0 && m.upper > 0.0, "ellipticity");
}

void ac6(Outcome& o) {
    const Small& s = small_checkerboard();
    const Grid w = small_cylinder(0.25).local_grid(s.a.grid());
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> xi{normal(rng), normal(rng)};
        const ExcessEvaluator ev(family_member(s.c, w, normal(rng), xi), s.a, &s.c);
        for (double r : {0.25, 0.125, 0.0625}) {
            const Cylinder C = centered_cylinder(w, r);
            worst = std::max(worst, ev.excess(C).value / ev.energy(C));
        }
    }
    const SpaceTimeField u = small_caloric(0.25, 11);
    const ExcessEvaluator base(u, s.a, &s.c);
    double invariance = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> xi{normal(rng), normal(rng)};
        SpaceTimeField v = family_member(s.c, w, normal(rng), xi);
        for (std::size_t i = 0; i < v.data().size(); ++i) v.data()[i] += u.data()[i];
        const ExcessEvaluator ev(v, s.a, &s.c);
        for (double r : {0.25, 0.125}) {
            const Cylinder C = centered_cylinder(w, r);
            const double e0 = base.excess(C).value;
            invariance = std::max(invariance, std::abs(ev.excess(C).value - e0) / e0);
        }
    }
    o.detail << "max relative family excess=" << worst << " invariance=" << invariance;
    o.require(worst <= 1e-10, "family");
    o.require(invariance <= 1e-12, "invariance");
}

void ac7(Outcome& o) {
    const Grid torus = Grid::parabolic(1, 256, 8, 1.0, 4.0);
    EnsembleSpec s = spec(EnsembleKind::constant, 1, 1);
    s.values = {1.0};
    const CoefficientField a = generate(s, torus);
    const ExtendedCorrector c = build_corrector(a, SolverConfig{}, {.potentials = false});
    const Cylinder C = Cylinder::make(torus, 1.0, {128, 0, 0}, 7);
    const Grid w = C.local_grid(torus);
    const auto u = sample(w, Cylinder::centered(w), [](std::span<const double> x, double t) { return x[0] * x[0] + 2 * t; });
    const double exc = ExcessEvaluator(u, a, &c).excess(centered_cylinder(w, 1.0)).value;
    o.detail << "Exc=" << exc << " rel.err=" << std::abs(exc - 4.0 / 3) / (4.0 / 3);
    o.require(std::abs(exc - 4.0 / 3) <= 0.01 * 4.0 / 3, "value");
}

void ac8(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    {
        EnsembleSpec s = spec(EnsembleKind::constant, 1, 1);
        s.values = {1.0};
        const CoefficientField a = generate(s, Grid::parabolic(2, 64, 8));
        const ExtendedCorrector c = build_corrector(a, SolverConfig{}, {.potentials = false});
        DecayOptions d;
        d.R_max = 0.25;
        d.levels = 4;
        d.center = {32, 32, 0};
        const auto rep = decay_experiment(a, c, d, [](std::span<const double> x, double t) { return x[0] * x[0] + 2 * t; });
        o.detail << "identity exponent=" << rep.fitted_exponent << "; ";
        o.require(std::abs(rep.fitted_exponent - 2.0) <= 0.2, "identity exponent");
    }
    const Grid g = Grid::parabolic(2, 128, 64, 16.0);
    std::vector<double> exps;
    bool decreasing = true;
    o.detail << "checkerboard exponents:";
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const CoefficientField a = generate(spec(EnsembleKind::checkerboard, 16, 4, seed), g);
        const ExtendedCorrector c = build_corrector(a, SolverConfig{}, {.potentials = false});
        DecayOptions d;
        d.seed = seed;
        d.R_max = 0.25;
        d.levels = 4;
        const auto rep = decay_experiment(a, c, d);
        exps.push_back(rep.resolved_zero ? 0.0 : rep.fitted_exponent);
        decreasing = decreasing && rep.decreasing_above_r_star();
        o.detail << " " << rep.fitted_exponent << "(r*=" << rep.r_star_estimate << ")";
    }
    std::vector<double> sorted = exps;
    std::sort(sorted.begin(), sorted.end());
    const double secs = seconds_since(t0);
    o.detail << " median=" << sorted[2] << " time=" << secs << "s";
    o.require(sorted[2] >= 1.0, "median exponent");
    o.require(decreasing, "decreasing above r*");
    o.require(secs <= 600.0, "runtime");
}

void ac9(Outcome& o) {
    const CoefficientField a = generate(spec(EnsembleKind::checkerboard, 16, 4), Grid::parabolic(2, 64, 64));
    const ExtendedCorrector c = build_corrector(a, SolverConfig{});
    // One cell (1/16) to a quarter torus.
    const auto rep = sublinearity_report(c, {1.0 / 16, 1.0 / 8, 1.0 / 4});
    bool mono = true;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        o.detail << "R=" << r.R << ":(" << r.phi_norm << "," << r.psi_norm << "," << r.sigma_norm << "," << r.zeta_norm
                 << ") ";
        if (i == 0) continue;
        const auto& p = rep.rows[i - 1];
        mono = mono && r.phi_norm <= p.phi_norm && r.psi_norm <= p.psi_norm && r.sigma_norm <= p.sigma_norm &&
               r.zeta_norm <= p.zeta_norm;
    }
    const double gap = std::abs(rep.rows.back().flux_avg - rep.flux_torus) / rep.flux_torus;
    o.detail << "flux gap=" << gap;
    o.require(mono, "non-increasing");
    o.require(gap <= 0.05, "flux");
}

void ac10(Outcome& o) {
    const Small& s = small_checkerboard();
    const double R = 0.25, rho = R / 4;
    double worst = 0.0;
    bool finite = true;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const SpaceTimeField u = small_caloric(R, seed);
        const double mean = cylinder_average(u, centered_cylinder(u.grid(), R))[0];
        const auto r = caccioppoli_ratio(u, CoefficientSampler::window(s.a, u.grid()), R, rho, mean);
        finite = finite && std::isfinite(r.ratio);
        worst = std::max(worst, r.ratio);
    }
    SpaceTimeField bad = small_caloric(R, 99);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1e-3, 1e-3);
    for (double& v : bad.data()) v += U(rng);
    bool rejected = false;
    try {
        caccioppoli_ratio(bad, CoefficientSampler::window(s.a, bad.grid()), R, rho, 0.0);
    } catch (const InvariantError&) {
        rejected = true;
    }
    o.detail << "50 fields, max ratio=" << worst << " non-caloric rejected=" << (rejected ? "yes" : "no");
    o.require(finite, "finite");
    o.require(rejected, "gate");
}

void ac11(Outcome& o) {
    QualitativeOptions q;
    q.micro = spec(EnsembleKind::checkerboard, 4, 4);
    q.macro_n = 256;
    q.h_ratio = 16.0;
    q.t_end = 0.02;
    const auto rows = qualitative_convergence(q, {1.0 / 8, 1.0 / 16, 1.0 / 32});
    bool decreasing = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        o.detail << "eps=" << rows[i].eps << ":" << rows[i].l2_error << " ";
        if (i > 0) decreasing = decreasing && rows[i].l2_error < rows[i - 1].l2_error;
    }
    o.require(decreasing, "strictly decreasing");
}

void ac12(Outcome& o) {
    const Small& s = small_checkerboard();
    const Grid w = small_cylinder(0.25).local_grid(s.a.grid());
    const std::vector<double> radii{0.25, 0.125, 0.0625};
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const double c0 = U(rng);
        const std::vector<double> xi{U(rng), U(rng)};
        const auto fit = liouville_recover(family_member(s.c, w, c0, xi), s.c, s.a, radii);
        worst = std::max({worst, std::abs(fit.c - c0), std::abs(fit.xi(0) - xi[0]), std::abs(fit.xi(1) - xi[1])});
    }
    const SpaceTimeField quad = sample(w, Cylinder::centered(w), [](std::span<const double> x, double t) {
        return x[0] * x[0] - x[1] * x[1] + 0.0 * t;
    });
    bool rejected = false;
    try {
        liouville_recover(quad, s.c, s.a, radii);
    } catch (const InvariantError&) {
        rejected = true;
    }
    o.detail << "max (c, xi) error over 10 inputs=" << worst << " quadratic rejected=" << (rejected ? "yes" : "no");
    o.require(worst <= 1e-6, "recovery");
    o.require(rejected, "gate");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ac13(Outcome& o) {
    const fs::path root = fs::temp_directory_path() / "parahom-acceptance";
    fs::remove_all(root);
    const std::vector<std::pair<std::string, std::string>> configs{
        {"corrector", R"([grid]
d = 2
n = 32
n_t = 32
[ensemble]
kind = "checkerboard"
cells = 4
cells_t = 4
[experiment]
name = "corrector")"},
        {"decay", R"(seeds = [1, 2]
[grid]
d = 2
n = 32
n_t = 64
h_ratio = 4.0
[ensemble]
kind = "checkerboard"
cells = 4
cells_t = 4
[experiment]
name = "excess-decay"
radii = [0.25]
levels = 3)"},
        {"sublinearity", R"([grid]
d = 2
n = 32
n_t = 32
[ensemble]
kind = "smoothed_noise"
cells = 4
cells_t = 4
[experiment]
name = "sublinearity"
radii = [0.125, 0.25])"},
        {"caccioppoli", R"([grid]
d = 2
n = 32
n_t = 64
[ensemble]
kind = "checkerboard"
cells = 4
cells_t = 4
[experiment]
name = "caccioppoli"
radii = [0.25]
rho = 0.25
samples = 3)"},
        {"two-scale", R"([grid]
d = 2
n = 128
n_t = 16
h_ratio = 64.0
[ensemble]
kind = "checkerboard"
cells = 16
cells_t = 4
[experiment]
name = "two-scale"
radii = [0.5]
eps_list = [0.03125]
rho = 0.124)"},
        {"qualitative", R"([grid]
d = 2
h_ratio = 16.0
[ensemble]
kind = "checkerboard"
cells = 2
cells_t = 2
[experiment]
name = "qualitative"
eps_list = [0.125, 0.0625]
macro_n = 128)"},
        {"liouville", R"([grid]
d = 2
n = 32
n_t = 64
[ensemble]
kind = "laminate"
cells = 4
cells_t = 1
[experiment]
name = "liouville"
radii = [0.125, 0.25]
samples = 3)"},
    };
    bool identical = true;
    int files = 0;
    std::ostringstream log;
    for (const auto& [name, text] : configs) {
        RunConfig cfg = parse_config(text, name);
        std::vector<fs::path> dirs{root / name / "a", root / name / "b"};
        for (const auto& d : dirs) {
            cfg.output_dir = root / name / "out";
            fs::remove_all(cfg.output_dir);
            const int code = run(cfg, log);
            o.require(code == exit_ok, name + " exit " + std::to_string(code));
            fs::create_directories(d);
            for (const auto& e : fs::directory_iterator(cfg.output_dir)) fs::copy(e.path(), d / e.path().filename());
        }
        for (const auto& e : fs::directory_iterator(dirs[0])) {
            ++files;
            const fs::path other = dirs[1] / e.path().filename();
            if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
                identical = false;
                o.detail << " differs:" << name << "/" << e.path().filename().string();
            }
        }
    }
    fs::remove_all(root);

    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 3;
        const Grid g = Grid::torus(d, d == 3 ? 6 : 12, 4, 1.0, 0.1);
        SpaceTimeField u(g, Rank::scalar), F(g, Rank::vector);
        std::mt19937_64 rng(static_cast<std::uint64_t>(trial));
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (double& v : u.data()) v = U(rng);
        for (double& v : F.data()) v = U(rng);
        const SpaceTimeField Gu = grad(u);
        const double lhs = inner(Gu, F), rhs = -inner(u, div(F));
        worst = std::max(worst, std::abs(lhs - rhs) / std::sqrt(inner(Gu, Gu) * inner(F, F)));
    }
    o.detail << "7 experiments x 2 runs, " << files << " files byte-identical=" << (identical ? "yes" : "no")
             << "; duality defect over 100 fields=" << worst;
    o.require(identical, "reproducibility");
    o.require(worst <= 1e-13, "duality");
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"AC1 constant coefficients", ac1},
        {"AC2 1D two-phase medium", ac2},
        {"AC3 2D laminate", ac3},
        {"AC4 time-only coefficients", ac4},
        {"AC5 structural identities", ac5},
        {"AC6 excess of the corrected affine family", ac6},
        {"AC7 excess value oracle", ac7},
        {"AC8 excess decay", ac8},
        {"AC9 sublinearity trends", ac9},
        {"AC10 Caccioppoli", ac10},
        {"AC11 qualitative homogenization", ac11},
        {"AC12 Liouville recovery", ac12},
        {"AC13 reproducibility and duality", ac13},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " exception: " << e.what();
        }
        std::printf("[%s] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
