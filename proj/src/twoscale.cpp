#include "parahom/twoscale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parahom/excess.hpp"
#include "parahom/parallel.hpp"

namespace parahom {

void TwoScaleConfig::validate() const {
    if (!(R > 0.0)) throw DomainError("two-scale radius must be positive");
    if (!(eps > 0.0 && eps < 0.25 * R)) throw DomainError("two-scale eps must lie in (0, R/4)");
    if (!(rho > 0.0 && rho < 0.125)) throw DomainError("two-scale rho must lie in (0, 1/8)");
}

double TwoScaleResult::term(const std::string& name) const {
    for (const auto& [k, v] : terms)
        if (k == name) return v;
    throw DomainError("no term named " + name);
}

namespace {

double cell_volume(const Grid& g) {
    double v = g.tau;
    for (int k = 0; k < g.d; ++k) v *= g.h;
    return v;
}

void require_same_window(const Grid& a, const Grid& b, const char* what) {
    bool same = a.d == b.d && a.n == b.n && a.n_t == b.n_t && a.origin_t == b.origin_t;
    for (int k = 0; k < a.d; ++k) same = same && a.origin[k] == b.origin[k];
    if (!same) throw DomainError(std::string(what) + ": grid mismatch");
}

}  // namespace

SpaceTimeField crop(const SpaceTimeField& f, const Grid& sub) {
    const Grid& g = f.grid();
    if (g.periodic || sub.periodic || g.d != sub.d) throw DomainError("crop expects two windows");
    Index shift{};
    for (int k = 0; k < g.d; ++k) {
        shift[k] = sub.origin[k] - g.origin[k];
        if (shift[k] < 0 || shift[k] + sub.n > g.n) throw DomainError("crop: sub-window leaves the window");
    }
    const int st = sub.origin_t - g.origin_t;
    if (st < 0 || st + sub.n_t > g.n_t) throw DomainError("crop: sub-window leaves the window in time");
    SpaceTimeField out(sub, f.rank());
    const std::size_t N = sub.spatial_size();
    std::vector<std::size_t> map(N);
    for (std::size_t x = 0; x < N; ++x) {
        Index j = sub.unravel(x);
        for (int k = 0; k < g.d; ++k) j[k] += shift[k];
        map[x] = g.ravel(j);
    }
    for (int c = 0; c < f.components(); ++c)
        for (int t = 0; t < sub.n_t; ++t) {
            const auto src = f.slice(st + t, c);
            auto dst = out.slice(t, c);
            for (std::size_t x = 0; x < N; ++x) dst[x] = src[map[x]];
        }
    return out;
}

// ---------------------------------------------------------------------------
// Mollifier

SpaceTimeField mollify(const SpaceTimeField& u, double eps) {
    const Grid& g = u.grid();
    if (!(eps >= g.h)) throw DomainError("mollification radius below the grid spacing");
    const int m = static_cast<int>(std::ceil(eps / g.h - 1e-12)) - 1;
    struct Tap {
        Index off;
        double w;
    };
    std::vector<Tap> taps;
    double total = 0.0;
    Index off{};
    for (int k = 0; k < g.d; ++k) off[k] = -m;
    while (true) {
        double r2 = 0.0;
        for (int k = 0; k < g.d; ++k) r2 += std::pow(off[k] * g.h / eps, 2);
        if (r2 < 1.0) {
            const double w = std::exp(-1.0 / (1.0 - r2));
            taps.push_back({off, w});
            total += w;
        }
        int k = 0;
        while (k < g.d && ++off[k] > m) off[k++] = -m;
        if (k == g.d) break;
    }
    for (auto& t : taps) t.w /= total;

    Grid og = g;
    if (!g.periodic) {
        og.n = g.n - 2 * m;
        if (og.n < 1) throw DomainError("window too small for the mollifier");
        for (int k = 0; k < g.d; ++k) og.origin[k] += m;
    }
    SpaceTimeField out(og, u.rank());
    const std::size_t N = og.spatial_size();
    // Source index of every (output node, tap) pair.
    std::vector<std::size_t> src(N * taps.size());
    for (std::size_t x = 0; x < N; ++x) {
        const Index j = og.unravel(x);
        for (std::size_t p = 0; p < taps.size(); ++p) {
            Index s{};
            for (int k = 0; k < g.d; ++k) s[k] = j[k] + taps[p].off[k] + (g.periodic ? 0 : m);
            src[x * taps.size() + p] = g.periodic ? g.ravel_wrapped(s) : g.ravel(s);
        }
    }
    for (int c = 0; c < u.components(); ++c)
        for (int t = 0; t < g.n_t; ++t) {
            const auto in = u.slice(t, c);
            auto o = out.slice(t, c);
            for (std::size_t x = 0; x < N; ++x) {
                double acc = 0.0;
                const std::size_t* s = src.data() + x * taps.size();
                for (std::size_t p = 0; p < taps.size(); ++p) acc += taps[p].w * in[s[p]];
                o[x] = acc;
            }
        }
    return out;
}

// ---------------------------------------------------------------------------
// Cutoff

SpaceTimeField cutoff(const Grid& g, const Cylinder& C, double rho) {
    const double R = C.radius;
    if (!(rho > 0.0 && rho < 0.5)) throw DomainError("cutoff shell fraction must lie in (0, 1/2)");
    if (rho * R < 4.0 * g.h) throw DomainError("cutoff shell thinner than 4 grid cells");
    const double outer = R * (1.0 - rho), width = rho * R;
    return sample(g, C, [&](std::span<const double> x, double t) {
        double s = std::sqrt(std::max(-t, 0.0));
        for (double v : x) s = std::max(s, std::abs(v));
        const double z = (outer - s) / width;
        if (z <= 0.0) return 0.0;
        if (z >= 1.0) return 1.0;
        return z * z * z * (10.0 + z * (-15.0 + 6.0 * z));
    });
}

// ---------------------------------------------------------------------------
// Extension and radius selection

SpaceTimeField ahom_extension(const SpaceTimeField& u_eps, const Matrix& ahom, const Cylinder& C,
                              const SolverConfig& cfg) {
    C.check_fits(u_eps.grid(), true);
    const Grid local = C.local_grid(u_eps.grid());
    return parabolic_dirichlet(ahom, local, crop(u_eps, local), cfg);
}

namespace {

// Integral over the parabolic boundary of C (lateral faces over its levels plus
// the bottom slice) of f(t, x), in units of the cylinder of radius R.
template <class F>
double boundary_integral(const Grid& g, const Cylinder& C, double R, F&& f) {
    const int m = C.half_width, d = g.d;
    double face = g.tau, slab = 1.0;
    for (int k = 0; k < d - 1; ++k) face *= g.h;
    for (int k = 0; k < d; ++k) slab *= g.h;
    face /= std::pow(R, d + 1);
    slab /= std::pow(R, d);
    const std::size_t N = g.spatial_size();
    double lat = 0.0, bottom = 0.0;
    const int t_bottom = C.top - C.levels;
    for (std::size_t x = 0; x < N; ++x) {
        const Index j = g.unravel(x);
        bool inside = true;
        int on_face = 0;
        double w_box = 1.0;
        for (int k = 0; k < d; ++k) {
            const int o = j[k] - C.center[k];
            if (std::abs(o) > m) inside = false;
            if (std::abs(o) == m) {
                ++on_face;
                w_box *= 0.5;
            }
        }
        if (!inside) continue;
        bottom += w_box * f(t_bottom, x);
        if (on_face == 0) continue;
        // Face weight: each face containing the node contributes the product of
        // the half weights of the other boundary coordinates.
        const double w_face = on_face * w_box * 2.0;
        for (int s = -C.levels + 1; s <= 0; ++s) lat += w_face * f(C.top + s, x);
    }
    return lat * face + bottom * slab;
}

}  // namespace

RadiusChoice radius_select(const SpaceTimeField& u, const SpaceTimeField& u_eps, double R, double eps) {
    const Grid& ge = u_eps.grid();
    const SpaceTimeField us = crop(u, ge);
    const Grid& gu = u.grid();
    const int d = ge.d;

    const Cylinder CR = centered_cylinder(gu, R);
    const SpaceTimeField gru = grad(u);
    double E = 0.0;
    for_each_cell(gu, CR, [&](int t, std::size_t x, const Index&, int) {
        for (int k = 0; k < d; ++k) E += gru(k, t, x) * gru(k, t, x);
    });
    E *= cell_volume(gu) / std::pow(R, d + 2);
    if (!(E > 0.0)) throw DomainError("radius selection needs a non-constant field");

    const SpaceTimeField gs = grad(us), ge_grad = grad(u_eps);
    const double et = eps / R;
    RadiusChoice best;
    best.score = std::numeric_limits<double>::infinity();
    const int mid = (ge.n - 1) / 2;
    for (int m = 1; m < mid; ++m) {
        const double r = m * ge.h;
        if (!(r > 0.5 * R && r < 0.75 * R)) continue;
        const Cylinder C = Cylinder::make(ge, r, {mid, mid, mid}, ge.n_t - 1);
        if (C.top - C.levels < 1) continue;
        const double i1 = boundary_integral(ge, C, R, [&](int t, std::size_t x) {
            return std::pow((u_eps(0, t, x) - us(0, t, x)) / R, 2);
        });
        const double i2 = boundary_integral(ge, C, R, [&](int t, std::size_t x) {
            return std::pow(R * (u_eps(0, t, x) - u_eps(0, t - 1, x)) / ge.tau, 2);
        });
        const double i3a = boundary_integral(ge, C, R, [&](int t, std::size_t x) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += gs(k, t, x) * gs(k, t, x);
            return s;
        });
        const double i3b = boundary_integral(ge, C, R, [&](int t, std::size_t x) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += ge_grad(k, t, x) * ge_grad(k, t, x);
            return s;
        });
        const double sE = std::sqrt(E);
        const double k1 = std::sqrt(i1) / (et * sE), k2 = et * std::sqrt(i2) / sE;
        const double k3 = (std::sqrt(i3a) + std::sqrt(i3b)) / sE;
        const double score = k1 + k2 + k3;
        best.candidates.push_back(r);
        best.scores.push_back(score);
        if (score < best.score) {
            best.score = score;
            best.r = r;
            best.half_width = m;
            best.k1 = k1;
            best.k2 = k2;
            best.k3 = k3;
            best.time_derivative_ratio = k2 / et;
        }
    }
    if (best.candidates.empty()) throw DomainError("no admissible radius in (R/2, 3R/4)");
    return best;
}

// ---------------------------------------------------------------------------
// Augmented homogenization error

SpaceTimeField homogenization_error(const SpaceTimeField& u, const SpaceTimeField& v,
                                    const std::vector<SpaceTimeField>& phi, const SpaceTimeField& eta) {
    const Grid& g = v.grid();
    require_same_window(u.grid(), g, "homogenization_error");
    require_same_window(eta.grid(), g, "homogenization_error");
    if (static_cast<int>(phi.size()) != g.d) throw DomainError("homogenization_error: need d correctors");
    for (const auto& p : phi) require_same_window(p.grid(), g, "homogenization_error");
    const SpaceTimeField dv = grad(v);
    SpaceTimeField w(g, Rank::scalar);
    const std::size_t N = g.spatial_size();
    for (int t = 0; t < g.n_t; ++t)
        for (std::size_t x = 0; x < N; ++x) {
            double s = 0.0;
            for (int i = 0; i < g.d; ++i) s += phi[static_cast<std::size_t>(i)](0, t, x) * dv(i, t, x);
            w(0, t, x) = (u(0, t, x) - v(0, t, x)) - eta(0, t, x) * s;
        }
    return w;
}

NormalizedCorrector normalize_corrector(const ExtendedCorrector& c, const Grid& window) {
    const int d = c.grid.d;
    const Cylinder C = Cylinder::centered(window);
    NormalizedCorrector out;
    for (int i = 0; i < d; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        SpaceTimeField p = restrict_to(c.phi[ii], window);
        const double mean = cylinder_average(p, C)[0];
        for (double& v : p.data()) v -= mean;
        out.phi.push_back(std::move(p));
        if (!c.has_potentials()) continue;
        for (const auto* src : {&c.psi[ii], &c.sigma[ii]}) {
            SpaceTimeField f = restrict_to(*src, window);
            for (int t = 0; t < window.n_t; ++t) {
                const auto m = slice_average(f, C, t);
                for (int k = 0; k < f.components(); ++k)
                    for (double& v : f.slice(t, k)) v -= m[static_cast<std::size_t>(k)];
            }
            (src == &c.psi[ii] ? out.psi : out.sigma).push_back(std::move(f));
        }
    }
    const auto dd = static_cast<std::size_t>(d);
    std::vector<double> top(dd * dd);
    out.zeta.assign(static_cast<std::size_t>(window.n_t), std::vector<double>(dd * dd));
    for (int k = 0; k < window.n_t; ++k) {
        const auto lvl = static_cast<std::size_t>(c.grid.wrap_t(window.origin_t + k));
        for (std::size_t i = 0; i < dd; ++i)
            for (std::size_t j = 0; j < dd; ++j) out.zeta[static_cast<std::size_t>(k)][i * dd + j] = c.zeta[i][lvl * dd + j];
    }
    top = out.zeta.back();
    for (auto& z : out.zeta)
        for (std::size_t e = 0; e < z.size(); ++e) z[e] -= top[e];
    return out;
}

double energy_left(const SpaceTimeField& w, const CoefficientSampler& a, double R) {
    const Grid& g = w.grid();
    const int d = g.d;
    const SpaceTimeField gw = grad(w);
    double acc = 0.0;
    for_each_cell(g, Cylinder::centered(g), [&](int t, std::size_t x, const Index&, int) {
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) acc += gw(r, t, x) * a.entry(r, c, t, x) * gw(c, t, x);
    });
    return acc * cell_volume(g) / std::pow(R, d + 2);
}

TwoScaleResult two_scale(const CoefficientField& a, const ExtendedCorrector& c, const SpaceTimeField& u,
                         const TwoScaleConfig& cfg, const SolverConfig& solver) {
    cfg.validate();
    const Grid& g = u.grid();
    if (g.periodic) throw DomainError("two-scale pipeline expects u on a cylinder window");
    const int d = g.d;
    const double R = cfg.R;
    TwoScaleResult res;
    res.u_eps = mollify(u, cfg.eps);
    res.radius = radius_select(u, res.u_eps, R, cfg.eps);
    const Cylinder Cr = centered_cylinder(res.u_eps.grid(), res.radius.r);
    res.v = ahom_extension(res.u_eps, c.ahom.ahom, Cr, solver);
    const Grid& W = res.v.grid();
    res.eta = cutoff(W, Cylinder::centered(W), cfg.rho);

    const NormalizedCorrector nc = normalize_corrector(c, g);
    std::vector<SpaceTimeField> phi_w;
    for (const auto& p : nc.phi) phi_w.push_back(crop(p, W));
    const SpaceTimeField uw = crop(u, W), uew = crop(res.u_eps, W);
    res.w = homogenization_error(uw, res.v, phi_w, res.eta);

    const auto mask = boundary_mask(W);
    res.boundary_identity = true;
    for (int t = 0; t < W.n_t; ++t)
        for (std::size_t x = 0; x < W.spatial_size(); ++x)
            if (t == 0 || mask[x]) res.boundary_identity = res.boundary_identity && res.w(0, t, x) == uw(0, t, x) - uew(0, t, x);

    res.a = CoefficientSampler::window(a, W);
    res.left = energy_left(res.w, res.a, R);

    // Norms over C_R in units of the cylinder of radius R.
    const Cylinder CR = Cylinder::centered(g);
    const double vol = cell_volume(g);
    double E = 0.0;
    const SpaceTimeField gu = grad(u);
    for_each_cell(g, CR, [&](int t, std::size_t x, const Index&, int) {
        for (int k = 0; k < d; ++k) E += gu(k, t, x) * gu(k, t, x);
    });
    E *= vol / std::pow(R, d + 2);
    double Phi = 0.0, Q = 0.0;
    std::vector<SpaceTimeField> q_w;
    for (const auto& qi : c.q) q_w.push_back(restrict_to(qi, g));
    for_each_node(g, CR, [&](int t, std::size_t x, double wt, const Index&, int) {
        double s = 0.0, sq = 0.0;
        for (int i = 0; i < d; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            s += std::pow(nc.phi[ii](0, t, x), 2);
            if (!nc.psi.empty()) {
                s += std::pow(nc.psi[ii](0, t, x), 2);
                for (int k = 0; k < nc.sigma[ii].components(); ++k) s += std::pow(nc.sigma[ii](k, t, x), 2);
            }
            for (int k = 0; k < d; ++k) sq += std::pow(q_w[ii](k, t, x), 2);
        }
        Phi += wt * s;
        Q += wt * sq;
    });
    Phi *= vol / std::pow(R, d + 4);
    Q *= vol / std::pow(R, d + 2);
    double Z = 0.0;
    for (int s = -CR.levels + 1; s <= 0; ++s)
        for (double z : nc.zeta[static_cast<std::size_t>(CR.top + s)]) Z += z * z;
    Z *= g.tau * std::pow(2 * CR.half_width * g.h, d) / std::pow(R, d + 6);

    const double et = cfg.eps / R, rho = cfg.rho;
    const double t_eps = et * E;
    const double t_shell = std::pow(rho, 2.0 / d) / (et * et) * E;
    const double t_corr = std::pow(rho, -(d + 4.0)) * Phi * E;
    const double t_zeta = (std::pow(rho, -(0.5 * d + 3.0)) * std::sqrt(Z) + std::pow(rho, -(d + 6.0)) * Z) * E;
    const double t_zq = std::pow(rho, -(d + 4.0)) * std::sqrt(Z) * std::sqrt(Q) * E;
    res.right = t_eps + t_shell + t_corr + t_zeta + t_zq;
    res.constant = res.left / res.right;
    res.terms = {{"left", res.left},
                 {"epsilon", t_eps},
                 {"shell", t_shell},
                 {"corrector", t_corr},
                 {"zeta", t_zeta},
                 {"zeta_flux", t_zq},
                 {"right", res.right},
                 {"constant", res.constant},
                 {"r_eps", res.radius.r},
                 {"k1", res.radius.k1},
                 {"k2", res.radius.k2},
                 {"k3", res.radius.k3},
                 {"energy_u", E},
                 {"corrector_l2", Phi},
                 {"zeta_l2", Z},
                 {"flux_l2", Q}};
    return res;
}

TermTable energy_report(const CoefficientField& a, const ExtendedCorrector& c, const SpaceTimeField& u,
                        const TwoScaleConfig& cfg, const SolverConfig& solver) {
    return two_scale(a, c, u, cfg, solver).terms;
}

// ---------------------------------------------------------------------------
// Qualitative homogenization

std::vector<QualitativeRow> qualitative_convergence(const QualitativeOptions& options,
                                                    const std::vector<double>& eps_list) {
    const EnsembleSpec& spec = options.micro;
    const int N = options.macro_n;
    const double h = 1.0 / N, tau = options.h_ratio * h * h;
    const int steps = static_cast<int>(std::lround(options.t_end / tau));
    if (steps < 1) throw DomainError("t_end shorter than one time step");
    struct Plan {
        int p, n_micro, nt_micro;
    };
    std::vector<Plan> plans;
    for (double eps : eps_list) {
        const double pd = eps * N;
        const int p = static_cast<int>(std::lround(pd));
        if (std::abs(pd - p) > 1e-9 || p < 8) throw DomainError("eps must be a multiple of h with eps >= 8h");
        const int n_micro = spec.cells * p;
        if (N % n_micro != 0) throw DomainError("micro torus does not tile the macro grid");
        const double ntd = spec.cells_t * static_cast<double>(p) * p / options.h_ratio;
        const int nt = static_cast<int>(std::lround(ntd));
        if (std::abs(ntd - nt) > 1e-9 || nt < 1) throw DomainError("micro period is not a whole number of steps");
        plans.push_back({p, n_micro, nt});
    }

    const Grid macro = Grid::parabolic(options.d, N, steps + 1, options.h_ratio);
    SpaceTimeField data(macro, Rank::scalar);
    const double pi = std::acos(-1.0);
    for (std::size_t x = 0; x < macro.spatial_size(); ++x) {
        const Index j = macro.unravel(x);
        double v = 1.0;
        for (int k = 0; k < macro.d; ++k) v *= std::sin(2 * pi * j[k] * h);
        data(0, 0, x) = v;
    }

    std::vector<QualitativeRow> rows(eps_list.size());
    parallel_for(eps_list.size(), [&](std::size_t e) {
        const Plan& pl = plans[e];
        const Grid micro = Grid::parabolic(macro.d, pl.n_micro, pl.nt_micro, options.h_ratio, spec.cells);
        const CoefficientField a = generate(spec, micro);
        const ExtendedCorrector c = build_corrector(a, options.solver, {.potentials = false});
        const SpaceTimeField u = evolve(CoefficientSampler::tiled(a, macro), macro, data, false, options.solver);
        const SpaceTimeField v = evolve(CoefficientSampler::uniform(c.ahom.ahom), macro, data, false, options.solver);
        double err = 0.0, nv = 0.0;
        for (int t = 1; t < macro.n_t; ++t) {
            const auto us = u.slice(t), vs = v.slice(t);
            for (std::size_t x = 0; x < us.size(); ++x) {
                err += (us[x] - vs[x]) * (us[x] - vs[x]);
                nv += vs[x] * vs[x];
            }
        }
        QualitativeRow row;
        row.eps = eps_list[e];
        row.nodes_per_cell = pl.p;
        row.ahom = c.ahom.ahom;
        row.l2_error = std::sqrt(err * cell_volume(macro));
        row.l2_relative = std::sqrt(err / nv);
        row.steps = steps;
        rows[e] = row;
    });
    return rows;
}

}  // namespace parahom
