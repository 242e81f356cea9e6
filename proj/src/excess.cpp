#include "parahom/excess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "parahom/parallel.hpp"

namespace parahom {

namespace {

CoefficientSampler sampler_under(const CoefficientField& a, const Grid& g) {
    return g.periodic ? CoefficientSampler::of(a) : CoefficientSampler::window(a, g);
}

}  // namespace

Cylinder centered_cylinder(const Grid& g, double r, int top) {
    Index center{};
    for (int k = 0; k < g.d; ++k) center[k] = (g.n - 1) / 2;
    return Cylinder::make(g, r, center, top < 0 ? g.n_t - 1 : top);
}

// ---------------------------------------------------------------------------
// ExcessEvaluator

ExcessEvaluator::ExcessEvaluator(const SpaceTimeField& u, const CoefficientSampler& a,
                                 const ExtendedCorrector* corrector)
    : g_(u.grid()), d_(u.grid().d), a_(a), grad_u_(grad(u)) {
    if (u.rank() != Rank::scalar) throw DomainError("excess expects a scalar field");
    if (a.dim() != d_) throw DomainError("coefficient dimension mismatch");
    if (!corrector) return;
    if (corrector->grid.d != d_) throw DomainError("corrector dimension mismatch");
    for (int k = 0; k < d_; ++k) {
        SpaceTimeField f = grad(restrict_to(corrector->phi[static_cast<std::size_t>(k)], g_));
        for (double& v : f.values(k)) v += 1.0;
        frame_.push_back(std::move(f));
    }
}

ExcessEvaluator::ExcessEvaluator(const SpaceTimeField& u, const CoefficientField& a,
                                 const ExtendedCorrector* corrector)
    : ExcessEvaluator(u, sampler_under(a, u.grid()), corrector) {}

template <class F>
void ExcessEvaluator::cells(const Cylinder& C, F&& fn) const {
    const int d = d_;
    std::array<double, 3> gu{};
    std::array<double, 9> fr{};  // fr[k*d + l] = component l of frame vector k
    std::array<double, 9> am{};
    for_each_cell(g_, C, [&](int t, std::size_t x, const Index&, int) {
        for (int l = 0; l < d; ++l) gu[static_cast<std::size_t>(l)] = grad_u_(l, t, x);
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l)
                fr[static_cast<std::size_t>(k * d + l)] =
                    frame_.empty() ? (k == l ? 1.0 : 0.0) : frame_[static_cast<std::size_t>(k)](l, t, x);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) am[static_cast<std::size_t>(r * d + c)] = a_.entry(r, c, t, x);
        fn(gu.data(), fr.data(), am.data());
    });
}

OptimalXi ExcessEvaluator::optimal_xi(const Cylinder& C) const {
    const int d = d_;
    Matrix M = Matrix::Zero(d, d);
    Vector b = Vector::Zero(d);
    std::size_t count = 0;
    cells(C, [&](const double* gu, const double* fr, const double* am) {
        // s = sym(a) applied to each frame vector
        std::array<double, 9> s{};
        for (int k = 0; k < d; ++k)
            for (int r = 0; r < d; ++r) {
                double v = 0.0;
                for (int c = 0; c < d; ++c) v += 0.5 * (am[r * d + c] + am[c * d + r]) * fr[k * d + c];
                s[static_cast<std::size_t>(k * d + r)] = v;
            }
        for (int k = 0; k < d; ++k) {
            for (int l = 0; l < d; ++l) {
                double v = 0.0;
                for (int r = 0; r < d; ++r) v += fr[l * d + r] * s[static_cast<std::size_t>(k * d + r)];
                M(k, l) += v;
            }
            double v = 0.0;
            for (int r = 0; r < d; ++r) v += gu[r] * s[static_cast<std::size_t>(k * d + r)];
            b(k) += v;
        }
        ++count;
    });
    M /= static_cast<double>(count);
    b /= static_cast<double>(count);
    M = 0.5 * (M + M.transpose());

    OptimalXi out;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    out.gram_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!out.well_posed() || !std::isfinite(out.gram_condition)) {
        out.xi = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
        return out;
    }
    out.xi = M.llt().solve(b);
    return out;
}

double ExcessEvaluator::objective(const Cylinder& C, const Vector& xi) const {
    const int d = d_;
    double acc = 0.0;
    std::size_t count = 0;
    cells(C, [&](const double* gu, const double* fr, const double* am) {
        std::array<double, 3> r{};
        for (int l = 0; l < d; ++l) {
            double v = gu[l];
            for (int k = 0; k < d; ++k) v -= xi(k) * fr[k * d + l];
            r[static_cast<std::size_t>(l)] = v;
        }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) acc += r[static_cast<std::size_t>(i)] * am[i * d + j] * r[static_cast<std::size_t>(j)];
        ++count;
    });
    return acc / static_cast<double>(count);
}

double ExcessEvaluator::energy(const Cylinder& C) const {
    return objective(C, Vector::Zero(d_));
}

ExcessReport ExcessEvaluator::excess(const Cylinder& C) const {
    const OptimalXi o = optimal_xi(C);
    if (!o.well_posed())
        throw InvariantError("degenerate corrected frame: Gram condition " + std::to_string(o.gram_condition));
    ExcessReport r;
    r.R = C.radius;
    r.xi_star = o.xi;
    r.gram_condition = o.gram_condition;
    r.value = std::max(0.0, objective(C, o.xi));
    return r;
}

OptimalXi optimal_xi(const SpaceTimeField& u, const ExtendedCorrector& corrector, const CoefficientField& a,
                     const Cylinder& C) {
    return ExcessEvaluator(u, a, &corrector).optimal_xi(C);
}

ExcessReport excess(const SpaceTimeField& u, const ExtendedCorrector& corrector, const CoefficientField& a,
                    const Cylinder& C) {
    return ExcessEvaluator(u, a, &corrector).excess(C);
}

// ---------------------------------------------------------------------------
// Decay

std::vector<double> DecayReport::values() const {
    std::vector<double> v;
    v.reserve(excess.size());
    for (const auto& e : excess) v.push_back(e.value);
    return v;
}

bool DecayReport::decreasing_above_r_star() const {
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (radii[i] >= r_star_estimate && !(excess[i].value < excess[i + 1].value)) return false;
    return true;
}

SpaceTimeField random_boundary_data(const Grid& local, const Cylinder& C, int degree, std::uint64_t seed) {
    struct Mode {
        std::array<double, 3> k{};
        double omega = 0.0, phase = 0.0, amp = 0.0;
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<int> freq(-degree, degree);
    std::uniform_int_distribution<int> tfreq(0, degree);
    std::vector<Mode> modes(8);
    for (auto& m : modes) {
        double k2 = 0.0;
        for (int i = 0; i < local.d; ++i) {
            m.k[static_cast<std::size_t>(i)] = freq(rng);
            k2 += m.k[static_cast<std::size_t>(i)] * m.k[static_cast<std::size_t>(i)];
        }
        m.omega = tfreq(rng);
        m.phase = std::acos(-1.0) * unit(rng);
        m.amp = unit(rng) / (1.0 + k2);
    }
    const double pi = std::acos(-1.0), R = C.radius;
    const Cylinder axis = Cylinder::centered(local);
    return sample(local, axis, [&](std::span<const double> x, double t) {
        double v = 0.0;
        for (const auto& m : modes) {
            double arg = m.phase + pi * m.omega * t / (R * R);
            for (std::size_t i = 0; i < x.size(); ++i) arg += pi * m.k[i] * x[i] / R;
            v += m.amp * std::cos(arg);
        }
        return v;
    });
}

double fit_exponent(const std::vector<double>& radii, const std::vector<double>& values) {
    const std::size_t n = radii.size();
    if (n < 2 || values.size() != n) throw DomainError("exponent fit needs at least two radii");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(radii[i]), y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double N = static_cast<double>(n);
    return (N * sxy - sx * sy) / (N * sxx - sx * sx);
}

double r_star_estimate(const std::vector<double>& radii, const std::vector<double>& values, double p,
                       double slack) {
    const double bound = std::pow(0.5, p) * (1.0 + slack);
    double r = radii.back();
    for (std::size_t i = radii.size() - 1; i-- > 0;) {
        if (!(values[i] / values[i + 1] <= bound)) break;
        r = radii[i];
    }
    return r;
}

DecayReport decay_from_solution(const ExcessEvaluator& ev, double R_max, int levels) {
    if (levels < 2) throw DomainError("decay needs at least two levels");
    const Grid& g = ev.grid();
    const int top = g.periodic ? -1 : g.n_t - 1;
    DecayReport rep;
    rep.radii.resize(static_cast<std::size_t>(levels));
    rep.excess.resize(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) rep.radii[static_cast<std::size_t>(levels - 1 - i)] = R_max / std::ldexp(1.0, i);
    parallel_for(rep.radii.size(), [&](std::size_t i) {
        rep.excess[i] = ev.excess(centered_cylinder(g, rep.radii[i], top));
        rep.excess[i].R = rep.radii[i];
    });

    const auto v = rep.values();
    const double dim = g.d + 2;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            const double coarse = std::pow(rep.radii[j] / rep.radii[i], dim) * v[j];
            const double ratio = coarse > 0.0 ? v[i] / coarse : (v[i] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            rep.worst_coarse_ratio = std::max(rep.worst_coarse_ratio, ratio);
        }
    rep.coarse_bound_ok = rep.worst_coarse_ratio <= 1.05;

    rep.resolved_zero = std::any_of(v.begin(), v.end(), [](double x) { return x <= excess_floor; });
    if (rep.resolved_zero) {
        rep.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
        rep.r_star_estimate = rep.radii.front();
        return rep;
    }
    rep.fitted_exponent = fit_exponent(rep.radii, v);
    rep.r_star_estimate = r_star_estimate(rep.radii, v, rep.fitted_exponent);
    return rep;
}

namespace {

DecayReport decay_with(const CoefficientField& a, const ExtendedCorrector& corrector, const DecayOptions& options,
                       const std::function<SpaceTimeField(const Grid&, const Cylinder&)>& make_data) {
    if (!(options.margin >= 1.0)) throw DomainError("decay margin must be at least 1");
    const Grid& torus = a.grid();
    const int top = options.top < 0 ? torus.n_t - 1 : options.top;
    const Cylinder C = Cylinder::make(torus, options.margin * options.R_max, options.center, top);
    const Grid local = C.local_grid(torus);
    SolveStats st;
    const SpaceTimeField u = parabolic_dirichlet(a, C, make_data(local, C), options.solver, &st);
    const ExcessEvaluator ev(u, a, &corrector);
    DecayReport rep = decay_from_solution(ev, options.R_max, options.levels);
    rep.solve = st;
    return rep;
}

}  // namespace

DecayReport decay_experiment(const CoefficientField& a, const ExtendedCorrector& corrector,
                             const DecayOptions& options,
                             const std::function<double(std::span<const double>, double)>& data) {
    return decay_with(a, corrector, options, [&](const Grid& local, const Cylinder&) {
        return sample(local, Cylinder::centered(local), data);
    });
}

DecayReport decay_experiment(const CoefficientField& a, const ExtendedCorrector& corrector,
                             const DecayOptions& options) {
    return decay_with(a, corrector, options, [&](const Grid& local, const Cylinder& C) {
        return random_boundary_data(local, C, options.degree, options.seed);
    });
}

// ---------------------------------------------------------------------------
// Sublinearity

namespace {

// sum over components of avg_C |f - avg_C f|^2
double centered_square(const SpaceTimeField& f, const Cylinder& C) {
    const auto mean = cylinder_average(f, C);
    double acc = 0.0, wsum = 0.0;
    for_each_node(f.grid(), C, [&](int t, std::size_t x, double w, const Index&, int) {
        for (int c = 0; c < f.components(); ++c) {
            const double v = f(c, t, x) - mean[static_cast<std::size_t>(c)];
            acc += w * v * v;
        }
        wsum += w;
    });
    return acc / wsum;
}

}  // namespace

SublinearityReport sublinearity_report(const ExtendedCorrector& c, const std::vector<double>& radii,
                                       const Index& center, int top) {
    const Grid& g = c.grid;
    const int d = g.d;
    const int t0 = top < 0 ? g.n_t - 1 : top;
    SublinearityReport rep;
    rep.flux_torus = c.ahom.ahom.norm();
    rep.rows.resize(radii.size());
    parallel_for(radii.size(), [&](std::size_t r) {
        const double R = radii[r];
        const Cylinder C = Cylinder::make(g, R, center, t0);
        SublinearityRow row;
        row.R = R;
        double sp = 0, ss = 0, sg = 0, fl = 0;
        for (int i = 0; i < d; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            sp += centered_square(c.phi[ii], C);
            if (c.has_potentials()) {
                ss += centered_square(c.psi[ii], C);
                sg += centered_square(c.sigma[ii], C);
            }
            for (double v : cylinder_average(c.q[ii], C)) fl += v * v;
        }
        // zeta is periodic in time; levels of C wrap.
        double zs = 0.0;
        const std::size_t entries = static_cast<std::size_t>(d * d);
        std::vector<double> mean(entries, 0.0);
        for (int s = -C.levels + 1; s <= 0; ++s) {
            const auto t = static_cast<std::size_t>(g.wrap_t(t0 + s));
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    mean[static_cast<std::size_t>(i * d + j)] += c.zeta[static_cast<std::size_t>(i)][t * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
        }
        for (double& m : mean) m /= C.levels;
        for (int s = -C.levels + 1; s <= 0; ++s) {
            const auto t = static_cast<std::size_t>(g.wrap_t(t0 + s));
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    const double v = c.zeta[static_cast<std::size_t>(i)][t * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] -
                                     mean[static_cast<std::size_t>(i * d + j)];
                    zs += v * v;
                }
        }
        const double zm = zs / C.levels;
        row.phi_norm = std::sqrt(sp) / R;
        row.psi_norm = c.has_potentials() ? std::sqrt(ss) / R : std::numeric_limits<double>::quiet_NaN();
        row.sigma_norm = c.has_potentials() ? std::sqrt(sg) / R : std::numeric_limits<double>::quiet_NaN();
        row.zeta_norm = std::sqrt(zm) / (R * R);
        row.flux_avg = std::sqrt(fl);
        rep.rows[r] = row;
    });
    return rep;
}

// ---------------------------------------------------------------------------
// Caccioppoli

CaccioppoliResult caccioppoli_ratio(const SpaceTimeField& u, const CoefficientSampler& a, double R, double rho,
                                    double c, double gate) {
    if (!(rho > 0.0 && rho <= 0.5 * R)) throw DomainError("Caccioppoli needs 0 < rho <= R/2");
    const Grid& g = u.grid();
    if (g.periodic) throw DomainError("Caccioppoli expects a window grid");
    CaccioppoliResult out;
    out.residual = caloric_residual(a, u);
    if (!(out.residual <= gate))
        throw InvariantError("input is not caloric: residual " + std::to_string(out.residual));
    const Cylinder outer = centered_cylinder(g, R);
    const Cylinder inner = outer.shrunk(g, R - rho);
    double vol = g.tau;
    for (int k = 0; k < g.d; ++k) vol *= g.h;

    const SpaceTimeField gu = grad(u);
    double e = 0.0;
    for_each_cell(g, inner, [&](int t, std::size_t x, const Index&, int) {
        for (int k = 0; k < g.d; ++k) e += gu(k, t, x) * gu(k, t, x);
    });
    auto l2 = [&](const Cylinder& C) {
        double s = 0.0;
        for_each_node(g, C, [&](int t, std::size_t x, double w, const Index&, int) {
            const double v = u(0, t, x) - c;
            s += w * v * v;
        });
        return s;
    };
    out.interior_energy = e * vol;
    out.shell_l2 = (l2(outer) - l2(inner)) * vol / (rho * rho);
    if (out.interior_energy == 0.0)
        out.ratio = 0.0;
    else
        out.ratio = out.shell_l2 > 0.0 ? out.interior_energy / out.shell_l2 : std::numeric_limits<double>::infinity();
    return out;
}

// ---------------------------------------------------------------------------
// Liouville

LiouvilleFit liouville_recover(const SpaceTimeField& u, const ExtendedCorrector& corrector,
                               const CoefficientField& a, const std::vector<double>& radii) {
    if (radii.empty()) throw DomainError("Liouville recovery needs at least one radius");
    const Grid& g = u.grid();
    const ExcessEvaluator ev(u, a, &corrector);
    LiouvilleFit fit;
    for (double r : radii) {
        const Cylinder C = centered_cylinder(g, r);
        const double value = ev.excess(C).value;
        fit.excess.push_back(value);
        const double scale = std::max(1.0, ev.energy(C));
        if (value > excess_floor * scale)
            throw InvariantError("excess " + std::to_string(value) + " above the floor at radius " + std::to_string(r));
    }
    const Cylinder C = centered_cylinder(g, *std::max_element(radii.begin(), radii.end()));
    fit.xi = ev.optimal_xi(C).xi;
    const std::vector<double> xi(fit.xi.data(), fit.xi.data() + fit.xi.size());
    const SpaceTimeField phi = restrict_to(corrector.phi_xi(xi), g);
    SpaceTimeField rest(g, Rank::scalar);
    for (int t = 0; t < g.n_t; ++t)
        for (std::size_t x = 0; x < g.spatial_size(); ++x) {
            const Index j = g.unravel(x);
            double v = u(0, t, x) - phi(0, t, x);
            for (int k = 0; k < g.d; ++k) v -= xi[static_cast<std::size_t>(k)] * (j[k] - C.center[k]) * g.h;
            rest(0, t, x) = v;
        }
    fit.c = cylinder_average(rest, C)[0];
    for_each_node(g, C, [&](int t, std::size_t x, double, const Index&, int) {
        fit.residual = std::max(fit.residual, std::abs(rest(0, t, x) - fit.c));
    });
    return fit;
}

}  // namespace parahom
