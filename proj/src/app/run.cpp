#include "parahom/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Core>
#include <fftw3.h>
#include <toml.hpp>

#include "parahom/excess.hpp"
#include "parahom/twoscale.hpp"
#include "text.hpp"

#ifndef PARAHOM_VERSION
#define PARAHOM_VERSION "0.0.0"
#endif

namespace parahom {

namespace {

using text::num;

class Csv {
public:
    Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
        if (!out_) throw ConfigError("cannot write " + path.string());
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

struct Gate {
    bool pass = true;
    std::string reason;
    void fail(const std::string& why) {
        if (pass) reason = why;
        pass = false;
    }
};

struct Context {
    const RunConfig& cfg;
    std::ostream& log;
    std::vector<std::pair<std::string, std::string>> results;
    Gate gate;

    std::filesystem::path file(const std::string& name) const { return cfg.output_dir / name; }
    void put(const std::string& k, const std::string& v) { results.emplace_back(k, v); }
    void put(const std::string& k, double v) { put(k, num(v)); }
    void flag(const std::string& k, bool v) { put(k, v ? "true" : "false"); }
};

std::string seed_key(std::uint64_t s, const std::string& k) { return "seed." + std::to_string(s) + "." + k; }

std::vector<std::string> xi_columns(const std::string& prefix, int d) {
    std::vector<std::string> out;
    for (int k = 1; k <= d; ++k) out.push_back(prefix + std::to_string(k));
    return out;
}

struct Realization {
    CoefficientField a;
    ExtendedCorrector c;
};

CoefficientField field_for(const RunConfig& cfg, std::uint64_t seed) {
    EnsembleSpec e = cfg.ensemble;
    e.seed = seed;
    return generate(e, cfg.grid.make());
}

// Corrector with its identity report recorded in the manifest; failed
// identities fail the gate.
Realization realize(Context& ctx, std::uint64_t seed, bool potentials) {
    CoefficientField a = field_for(ctx.cfg, seed);
    ctx.log << "seed " << seed << ": corrector\n";
    ExtendedCorrector c = build_corrector(a, ctx.cfg.solver, {.potentials = potentials});
    const IdentityReport rep = verify(a, c, {}, ctx.cfg.solver.theta);
    const int d = a.grid().d;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            ctx.put(seed_key(seed, "ahom." + std::to_string(i + 1) + "." + std::to_string(j + 1)), c.ahom.ahom(i, j));
    for (const auto& it : rep.items) {
        ctx.put(seed_key(seed, "residual." + it.name), it.value);
        ctx.put(seed_key(seed, "threshold." + it.name), it.threshold);
        ctx.flag(seed_key(seed, "pass." + it.name), it.pass);
        if (!it.pass) ctx.gate.fail("identity " + it.name + " failed for seed " + std::to_string(seed));
    }
    return {std::move(a), std::move(c)};
}

// Random caloric field on the window of C_R at the torus origin, top at the last level.
SpaceTimeField caloric_sample(const CoefficientField& a, double R, std::uint64_t seed, const SolverConfig& s) {
    const Grid& g = a.grid();
    const Cylinder C = Cylinder::make(g, R, {}, g.n_t - 1);
    const Grid w = C.local_grid(g);
    return parabolic_dirichlet(a, C, random_boundary_data(w, C, 3, seed), s);
}

std::uint64_t sample_seed(std::uint64_t seed, int k) { return seed * 1000003ULL + static_cast<std::uint64_t>(k); }

void corrector_experiment(Context& ctx) {
    const int d = ctx.cfg.grid.d;
    Csv ahom(ctx.file("ahom.csv"), {"seed", "i", "j", "value"});
    Csv ids(ctx.file("identities.csv"), {"seed", "name", "value", "threshold", "pass"});
    for (std::uint64_t s : ctx.cfg.effective_seeds()) {
        const Realization r = realize(ctx, s, true);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                ahom.row({std::to_string(s), std::to_string(i + 1), std::to_string(j + 1), num(r.c.ahom.ahom(i, j))});
        for (const auto& it : verify(r.a, r.c, {}, ctx.cfg.solver.theta).items)
            ids.row({std::to_string(s), it.name, num(it.value), num(it.threshold), it.pass ? "true" : "false"});
    }
}

void decay_experiment_run(Context& ctx) {
    const auto& x = ctx.cfg.experiment;
    const int d = ctx.cfg.grid.d;
    std::vector<std::string> header{"seed", "radius", "excess"};
    for (auto& c : xi_columns("xi_", d)) header.push_back(c);
    header.push_back("gram_condition");
    Csv csv(ctx.file("decay.csv"), header);
    std::vector<double> exponents;
    for (std::uint64_t s : ctx.cfg.effective_seeds()) {
        const Realization r = realize(ctx, s, false);
        DecayOptions o;
        o.seed = s;
        o.R_max = *std::max_element(x.radii.begin(), x.radii.end());
        o.levels = x.levels;
        o.solver = ctx.cfg.solver;
        ctx.log << "seed " << s << ": decay\n";
        const DecayReport rep = decay_experiment(r.a, r.c, o);
        for (std::size_t i = 0; i < rep.radii.size(); ++i) {
            const auto& e = rep.excess[i];
            std::vector<std::string> row{std::to_string(s), num(rep.radii[i]), num(e.value)};
            for (int k = 0; k < d; ++k) row.push_back(num(e.xi_star[k]));
            row.push_back(num(e.gram_condition));
            csv.row(row);
        }
        ctx.put(seed_key(s, "fitted_exponent"), rep.fitted_exponent);
        ctx.put(seed_key(s, "r_star_estimate"), rep.r_star_estimate);
        ctx.flag(seed_key(s, "resolved_zero"), rep.resolved_zero);
        ctx.flag(seed_key(s, "decreasing_above_r_star"), rep.decreasing_above_r_star());
        ctx.flag(seed_key(s, "coarse_bound_ok"), rep.coarse_bound_ok);
        ctx.put(seed_key(s, "worst_coarse_ratio"), rep.worst_coarse_ratio);
        if (!rep.resolved_zero) exponents.push_back(rep.fitted_exponent);
    }
    if (!exponents.empty()) {
        std::sort(exponents.begin(), exponents.end());
        const std::size_t m = exponents.size();
        ctx.put("median_fitted_exponent", m % 2 ? exponents[m / 2] : 0.5 * (exponents[m / 2 - 1] + exponents[m / 2]));
    }
}

void sublinearity_run(Context& ctx) {
    Csv csv(ctx.file("sublinearity.csv"), {"seed", "R", "phi_norm", "psi_norm", "sigma_norm", "zeta_norm", "flux_avg"});
    for (std::uint64_t s : ctx.cfg.effective_seeds()) {
        const Realization r = realize(ctx, s, true);
        std::vector<double> radii = ctx.cfg.experiment.radii;
        std::sort(radii.begin(), radii.end());
        const SublinearityReport rep = sublinearity_report(r.c, radii);
        bool mono[4] = {true, true, true, true};
        for (std::size_t i = 0; i < rep.rows.size(); ++i) {
            const auto& w = rep.rows[i];
            csv.row({std::to_string(s), num(w.R), num(w.phi_norm), num(w.psi_norm), num(w.sigma_norm), num(w.zeta_norm),
                     num(w.flux_avg)});
            if (i == 0) continue;
            const auto& p = rep.rows[i - 1];
            mono[0] = mono[0] && w.phi_norm <= p.phi_norm;
            mono[1] = mono[1] && w.psi_norm <= p.psi_norm;
            mono[2] = mono[2] && w.sigma_norm <= p.sigma_norm;
            mono[3] = mono[3] && w.zeta_norm <= p.zeta_norm;
        }
        ctx.put(seed_key(s, "flux_torus"), rep.flux_torus);
        const char* names[4] = {"phi", "psi", "sigma", "zeta"};
        for (int k = 0; k < 4; ++k) ctx.flag(seed_key(s, std::string(names[k]) + "_non_increasing"), mono[k]);
        if (!rep.rows.empty())
            ctx.put(seed_key(s, "flux_relative_gap"), std::abs(rep.rows.back().flux_avg - rep.flux_torus) / rep.flux_torus);
    }
}

void caccioppoli_run(Context& ctx) {
    const auto& x = ctx.cfg.experiment;
    const double R = x.radii.front(), rho = x.rho * R;
    Csv csv(ctx.file("caccioppoli.csv"), {"seed", "sample", "ratio", "interior_energy", "shell_l2", "residual"});
    double worst = 0.0;
    for (std::uint64_t s : ctx.cfg.effective_seeds()) {
        const CoefficientField a = field_for(ctx.cfg, s);
        ctx.log << "seed " << s << ": " << x.samples << " caloric fields\n";
        for (int k = 0; k < x.samples; ++k) {
            const SpaceTimeField u = caloric_sample(a, R, sample_seed(s, k), ctx.cfg.solver);
            const double c = cylinder_average(u, Cylinder::centered(u.grid()))[0];
            const CaccioppoliResult res = caccioppoli_ratio(u, CoefficientSampler::window(a, u.grid()), R, rho, c);
            csv.row({std::to_string(s), std::to_string(k), num(res.ratio), num(res.interior_energy), num(res.shell_l2),
                     num(res.residual)});
            if (!std::isfinite(res.ratio)) ctx.gate.fail("non-finite Caccioppoli ratio");
            worst = std::max(worst, res.ratio);
        }
    }
    ctx.put("max_ratio", worst);
}

void two_scale_run(Context& ctx) {
    const auto& x = ctx.cfg.experiment;
    TwoScaleConfig tc{.eps = x.eps_list.front(), .rho = x.rho, .R = x.radii.front()};
    try {
        tc.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    Csv csv(ctx.file("twoscale.csv"), {"seed", "term", "value"});
    double worst = 0.0;
    for (std::uint64_t s : ctx.cfg.effective_seeds()) {
        const Realization r = realize(ctx, s, true);
        const SpaceTimeField u = caloric_sample(r.a, tc.R, sample_seed(s, 0), ctx.cfg.solver);
        ctx.log << "seed " << s << ": two-scale pipeline\n";
        const TwoScaleResult res = two_scale(r.a, r.c, u, tc, ctx.cfg.solver);
        for (const auto& [k, v] : res.terms) csv.row({std::to_string(s), k, num(v)});
        ctx.put(seed_key(s, "constant"), res.constant);
        ctx.put(seed_key(s, "r_eps"), res.radius.r);
        ctx.flag(seed_key(s, "boundary_identity"), res.boundary_identity);
        const double recomputed = energy_left(res.w, res.a, tc.R);
        const bool consistent = std::abs(recomputed - res.left) <= 1e-12 * std::max(std::abs(res.left), 1e-300);
        ctx.flag(seed_key(s, "left_consistent"), consistent);
        if (!res.boundary_identity) ctx.gate.fail("boundary identity of w failed");
        if (!consistent) ctx.gate.fail("energy left side inconsistent");
        if (!std::isfinite(res.constant)) ctx.gate.fail("non-finite empirical constant");
        worst = std::max(worst, res.constant);
    }
    ctx.put("max_constant", worst);
}

void qualitative_run(Context& ctx) {
    const auto& x = ctx.cfg.experiment;
    const int d = ctx.cfg.grid.d;
    std::vector<std::string> header{"seed", "eps", "nodes_per_cell", "steps", "l2_error", "l2_relative"};
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j) header.push_back("ahom_" + std::to_string(i) + std::to_string(j));
    Csv csv(ctx.file("qualitative.csv"), header);
    for (std::uint64_t s : ctx.cfg.effective_seeds()) {
        QualitativeOptions o;
        o.micro = ctx.cfg.ensemble;
        o.micro.seed = s;
        o.d = d;
        o.macro_n = x.macro_n;
        o.h_ratio = ctx.cfg.grid.h_ratio;
        o.t_end = x.t_end;
        o.solver = ctx.cfg.solver;
        ctx.log << "seed " << s << ": qualitative sweep\n";
        const auto rows = qualitative_convergence(o, x.eps_list);
        bool decreasing = true;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            std::vector<std::string> row{std::to_string(s), num(r.eps), std::to_string(r.nodes_per_cell),
                                         std::to_string(r.steps), num(r.l2_error), num(r.l2_relative)};
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) row.push_back(num(r.ahom(a, b)));
            csv.row(row);
            if (i > 0 && rows[i].eps < rows[i - 1].eps) decreasing = decreasing && r.l2_error < rows[i - 1].l2_error;
        }
        ctx.flag(seed_key(s, "error_decreasing"), decreasing);
    }
}

void liouville_run(Context& ctx) {
    const auto& x = ctx.cfg.experiment;
    const int d = ctx.cfg.grid.d;
    const double R = *std::max_element(x.radii.begin(), x.radii.end());
    std::vector<std::string> header{"seed", "sample", "c", "c_fit"};
    for (auto& c : xi_columns("xi_", d)) header.push_back(c);
    for (auto& c : xi_columns("xi_fit_", d)) header.push_back(c);
    header.push_back("residual");
    Csv csv(ctx.file("liouville.csv"), header);
    double worst = 0.0;
    for (std::uint64_t s : ctx.cfg.effective_seeds()) {
        const Realization r = realize(ctx, s, false);
        const Grid& g = r.a.grid();
        const Grid w = Cylinder::make(g, R, {}, g.n_t - 1).local_grid(g);
        const int mid = (w.n - 1) / 2;
        std::mt19937_64 rng(s);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int k = 0; k < x.samples; ++k) {
            const double c = U(rng);
            std::vector<double> xi(static_cast<std::size_t>(d));
            for (double& v : xi) v = U(rng);
            const SpaceTimeField phi = restrict_to(r.c.phi_xi(xi), w);
            SpaceTimeField u(w, Rank::scalar);
            for (int t = 0; t < w.n_t; ++t)
                for (std::size_t n = 0; n < w.spatial_size(); ++n) {
                    const Index j = w.unravel(n);
                    double v = c + phi(0, t, n);
                    for (int q = 0; q < d; ++q) v += xi[static_cast<std::size_t>(q)] * (j[q] - mid) * w.h;
                    u(0, t, n) = v;
                }
            const LiouvilleFit fit = liouville_recover(u, r.c, r.a, x.radii);
            double err = std::abs(fit.c - c);
            std::vector<std::string> row{std::to_string(s), std::to_string(k), num(c), num(fit.c)};
            for (double v : xi) row.push_back(num(v));
            for (int q = 0; q < d; ++q) {
                row.push_back(num(fit.xi[q]));
                err = std::max(err, std::abs(fit.xi[q] - xi[static_cast<std::size_t>(q)]));
            }
            row.push_back(num(fit.residual));
            csv.row(row);
            worst = std::max(worst, err);
        }
    }
    ctx.put("max_recovery_error", worst);
    if (!(worst <= 1e-6)) ctx.gate.fail("Liouville recovery error above 1e-6");
}

std::string versions_line(const char* name, const std::string& v) { return std::string("version.") + name + " = " + v; }

void write_manifest(const RunConfig& cfg, const Context* ctx, const std::string& status, const std::string& message) {
    std::ofstream out(cfg.output_dir / "manifest.txt", std::ios::binary);
    if (!out) return;
    out << versions_line("parahom", PARAHOM_VERSION) << '\n';
    out << versions_line("fftw", fftw_version) << '\n';
    out << versions_line("eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                      std::to_string(EIGEN_MINOR_VERSION))
        << '\n';
    out << versions_line("tomlplusplus", std::to_string(TOML_LIB_MAJOR) + "." + std::to_string(TOML_LIB_MINOR) + "." +
                                             std::to_string(TOML_LIB_PATCH))
        << '\n';
    out << versions_line("compiler", __VERSION__) << '\n';
    for (const auto& line : cfg.echo()) out << "config." << line << '\n';
    if (ctx)
        for (const auto& [k, v] : ctx->results) out << k << " = " << v << '\n';
    out << "status = " << status << '\n';
    out << "message = " << message << '\n';
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) {
        log << "error: cannot create " << cfg.output_dir << ": " << ec.message() << '\n';
        return exit_config;
    }
    Context ctx{cfg, log, {}, {}};
    int code = exit_ok;
    std::string status = "ok", message = "all gates passed";
    try {
        cfg.validate();
        switch (cfg.experiment.name) {
        case Experiment::corrector: corrector_experiment(ctx); break;
        case Experiment::excess_decay: decay_experiment_run(ctx); break;
        case Experiment::sublinearity: sublinearity_run(ctx); break;
        case Experiment::caccioppoli: caccioppoli_run(ctx); break;
        case Experiment::two_scale: two_scale_run(ctx); break;
        case Experiment::qualitative: qualitative_run(ctx); break;
        case Experiment::liouville: liouville_run(ctx); break;
        }
        if (!ctx.gate.pass) {
            code = exit_gate;
            status = "gate-failure";
            message = ctx.gate.reason;
        }
    } catch (const ConfigError& e) {
        code = exit_config, status = "config-error", message = e.what();
    } catch (const DomainError& e) {
        code = exit_config, status = "config-error", message = e.what();
    } catch (const SolverError& e) {
        code = exit_solver, status = "solver-failure", message = e.what();
    } catch (const InvariantError& e) {
        code = exit_gate, status = "gate-failure", message = e.what();
    }
    write_manifest(cfg, &ctx, status, message);
    log << status << ": " << message << '\n';
    return code;
}

int run_file(const std::filesystem::path& config, const std::optional<std::filesystem::path>& output_dir,
             std::ostream& log) {
    RunConfig cfg;
    try {
        cfg = load_config(config);
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << '\n';
        return exit_config;
    }
    if (output_dir) cfg.output_dir = *output_dir;
    return run(cfg, log);
}

const std::string* Manifest::find(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

Manifest read_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.txt");
    if (!in) throw ConfigError("no manifest.txt in " + dir.string());
    Manifest m;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        m.entries.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    }
    return m;
}

namespace {

void emit_gnuplot(const std::filesystem::path& dir) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".csv") continue;
        std::ifstream in(entry.path());
        std::filesystem::path dat = entry.path();
        dat.replace_extension(".dat");
        std::ofstream out(dat, std::ios::binary);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            std::replace(line.begin(), line.end(), ',', ' ');
            out << (first ? "# " : "") << line << '\n';
            first = false;
        }
    }
}

}  // namespace

std::string report(const std::filesystem::path& dir, bool gnuplot) {
    const Manifest m = read_manifest(dir);
    std::ostringstream os;
    auto get = [&](const std::string& k) {
        const std::string* v = m.find(k);
        return v ? *v : std::string("?");
    };
    os << "experiment: " << get("config.experiment.name") << '\n';
    os << "status:     " << get("status") << " (" << get("message") << ")\n";

    // Group the per-seed entries.
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> seeds;
    std::vector<std::pair<std::string, std::string>> global;
    for (const auto& [k, v] : m.entries) {
        if (k.rfind("seed.", 0) == 0) {
            const auto dot = k.find('.', 5);
            seeds[k.substr(5, dot - 5)].emplace_back(k.substr(dot + 1), v);
        } else if (k.rfind("config.", 0) != 0 && k.rfind("version.", 0) != 0 && k != "status" && k != "message") {
            global.emplace_back(k, v);
        }
    }
    for (const auto& [seed, items] : seeds) {
        os << "\nseed " << seed << '\n';
        std::vector<std::pair<std::string, std::string>> ahom, other;
        std::vector<std::string> residual_names;
        std::map<std::string, std::string> lookup;
        for (const auto& [k, v] : items) {
            lookup[k] = v;
            if (k.rfind("ahom.", 0) == 0) ahom.emplace_back(k.substr(5), v);
            else if (k.rfind("residual.", 0) == 0) residual_names.push_back(k.substr(9));
            else if (k.rfind("threshold.", 0) != 0 && k.rfind("pass.", 0) != 0) other.emplace_back(k, v);
        }
        if (!ahom.empty()) {
            os << "  ahom:\n";
            const std::size_t d = static_cast<std::size_t>(std::lround(std::sqrt(ahom.size())));
            for (std::size_t i = 0; i < d; ++i) {
                os << "   ";
                for (std::size_t j = 0; j < d; ++j) os << ' ' << ahom[i * d + j].second;
                os << '\n';
            }
        }
        if (!residual_names.empty()) {
            os << "  identity residuals (value / threshold / pass):\n";
            for (const auto& n : residual_names)
                os << "    " << n << "  " << lookup["residual." + n] << " / " << lookup["threshold." + n] << " / "
                   << lookup["pass." + n] << '\n';
        }
        for (const auto& [k, v] : other) os << "  " << k << " = " << v << '\n';
    }
    if (!global.empty()) {
        os << '\n';
        for (const auto& [k, v] : global) os << k << " = " << v << '\n';
    }
    if (gnuplot) emit_gnuplot(dir);
    return os.str();
}

}  // namespace parahom
