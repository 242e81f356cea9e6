#include "parahom/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "parahom/parallel.hpp"

namespace parahom {

EllipticityMargins HomogenizedMatrix::margins(int samples, std::uint64_t seed) const {
    const auto d = ahom.rows();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    EllipticityMargins m{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (int s = 0; s < samples; ++s) {
        Vector xi(d);
        for (Eigen::Index k = 0; k < d; ++k) xi(k) = normal(rng);
        xi.normalize();
        m.lower = std::min(m.lower, xi.dot(ahom * xi) - lambda);
        m.upper = std::min(m.upper, 1.0 / lambda - (ahom * xi).norm());
    }
    return m;
}

SpaceTimeField ExtendedCorrector::phi_xi(std::span<const double> xi) const {
    SpaceTimeField out(grid, Rank::scalar);
    auto o = out.data();
    for (int i = 0; i < grid.d; ++i) {
        const double w = xi[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const auto p = phi[static_cast<std::size_t>(i)].data();
        for (std::size_t x = 0; x < o.size(); ++x) o[x] += w * p[x];
    }
    return out;
}

double ExtendedCorrector::zeta_period_end(int i, int j) const {
    const int d = grid.d;
    const auto& z = zeta[static_cast<std::size_t>(i)];
    const auto& c = cond_flux[static_cast<std::size_t>(i)];
    const std::size_t last = static_cast<std::size_t>((grid.n_t - 1) * d + j);
    return z[last] + grid.tau * (c[static_cast<std::size_t>(j)] - ahom.ahom(j, i));
}

std::vector<SpaceTimeField> build_phi(const CoefficientField& a, const SolverConfig& cfg,
                                      std::vector<SolveStats>* stats) {
    const int d = a.grid().d;
    std::vector<SpaceTimeField> phi(static_cast<std::size_t>(d));
    std::vector<SolveStats> st(static_cast<std::size_t>(d));
    parallel_for(static_cast<std::size_t>(d), [&](std::size_t i) {
        phi[i] = parabolic_cell(a, static_cast<int>(i), cfg, &st[i]);
        auto v = phi[i].values();
        double s = 0.0;
        for (double x : v) s += x;
        const double m = s / static_cast<double>(v.size());
        for (double& x : v) x -= m;
    });
    if (stats) *stats = st;
    return phi;
}

std::vector<SpaceTimeField> flux(const CoefficientField& a, const std::vector<SpaceTimeField>& phi) {
    const Grid& g = a.grid();
    const int d = g.d;
    if (phi.size() != static_cast<std::size_t>(d)) throw DomainError("flux needs d corrector components");
    const auto sampler = CoefficientSampler::of(a);
    std::vector<SpaceTimeField> q;
    for (int i = 0; i < d; ++i) {
        if (!phi[static_cast<std::size_t>(i)].grid().same_geometry(g)) throw DomainError("flux: grid mismatch");
        q.emplace_back(g, Rank::vector);
    }
    const std::size_t N = g.spatial_size();
    StepOperator op(g);
    std::vector<double> buf(static_cast<std::size_t>(d) * N);
    for (int t = 0; t < g.n_t; ++t) {
        op.load(sampler, t);
        for (int i = 0; i < d; ++i) {
            std::vector<double> e(static_cast<std::size_t>(d), 0.0);
            e[static_cast<std::size_t>(i)] = 1.0;
            op.flux(phi[static_cast<std::size_t>(i)].slice(t), e, buf);
            for (int j = 0; j < d; ++j) {
                auto dst = q[static_cast<std::size_t>(i)].slice(t, j);
                std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j) * N), N, dst.begin());
            }
        }
    }
    return q;
}

HomogenizedMatrix homogenized(const std::vector<SpaceTimeField>& q, double lambda) {
    if (q.empty()) throw DomainError("homogenized: empty flux");
    const int d = q.front().grid().d;
    HomogenizedMatrix h;
    h.lambda = lambda;
    h.ahom = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const auto v = q[static_cast<std::size_t>(i)].values(j);
            double s = 0.0;
            for (double x : v) s += x;
            h.ahom(j, i) = s / static_cast<double>(v.size());
        }
    const auto m = h.margins();
    const Matrix sym = 0.5 * (h.ahom + h.ahom.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    Eigen::JacobiSVD<Matrix> svd(h.ahom);
    if (eig.eigenvalues().minCoeff() < lambda * (1.0 - 1e-12) ||
        svd.singularValues().maxCoeff() > (1.0 + 1e-12) / lambda || m.lower < -1e-12 || m.upper < -1e-12)
        throw InvariantError("homogenized matrix violates the ellipticity bounds (unconverged corrector?)");
    return h;
}

std::vector<std::vector<double>> conditional_flux(const std::vector<SpaceTimeField>& q) {
    std::vector<std::vector<double>> out;
    for (const auto& qi : q) {
        const Grid& g = qi.grid();
        std::vector<double> series(static_cast<std::size_t>(g.n_t * g.d));
        for (int t = 0; t < g.n_t; ++t)
            for (int j = 0; j < g.d; ++j) {
                double s = 0.0;
                for (double x : qi.slice(t, j)) s += x;
                series[static_cast<std::size_t>(t * g.d + j)] = s / static_cast<double>(g.spatial_size());
            }
        out.push_back(std::move(series));
    }
    return out;
}

std::vector<SpaceTimeField> build_psi(const std::vector<SpaceTimeField>& q) {
    std::vector<SpaceTimeField> psi;
    for (const auto& qi : q) psi.push_back(poisson_torus(div(qi)));
    return psi;
}

std::vector<SpaceTimeField> build_sigma(const std::vector<SpaceTimeField>& q,
                                        const std::vector<SpaceTimeField>& psi) {
    if (q.size() != psi.size()) throw DomainError("build_sigma: component count mismatch");
    std::vector<SpaceTimeField> sigma;
    if (q.empty()) return sigma;
    const Grid& g = q.front().grid();
    const int d = g.d;
    const std::size_t N = g.spatial_size();
    PoissonTorus poisson(g);
    for (std::size_t i = 0; i < q.size(); ++i) {
        SpaceTimeField s(g, Rank::matrix);
        parallel_for(static_cast<std::size_t>(g.n_t), [&](std::size_t tt) {
            const int t = static_cast<int>(tt);
            std::vector<double> gfield(static_cast<std::size_t>(d) * N), a(N), b(N), sol(N);
            for (int j = 0; j < d; ++j) {
                std::span<double> gj(gfield.data() + static_cast<std::size_t>(j) * N, N);
                forward_diff(g, psi[i].slice(t), j, gj);
                const auto qj = q[i].slice(t, j);
                for (std::size_t x = 0; x < N; ++x) gj[x] = qj[x] - gj[x];
            }
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < j; ++k) {
                    forward_diff(g, std::span<const double>(gfield.data() + static_cast<std::size_t>(j) * N, N), k, a);
                    forward_diff(g, std::span<const double>(gfield.data() + static_cast<std::size_t>(k) * N, N), j, b);
                    for (std::size_t x = 0; x < N; ++x) a[x] -= b[x];
                    poisson.solve(a, sol);
                    auto sjk = s.slice(t, j * d + k);
                    auto skj = s.slice(t, k * d + j);
                    for (std::size_t x = 0; x < N; ++x) {
                        sjk[x] = sol[x];
                        skj[x] = -sol[x];
                    }
                }
        });
        sigma.push_back(std::move(s));
    }
    return sigma;
}

std::vector<std::vector<double>> build_zeta(const Grid& g, const std::vector<std::vector<double>>& cond_flux,
                                            const Matrix& ahom) {
    const int d = g.d;
    std::vector<std::vector<double>> zeta;
    for (std::size_t i = 0; i < cond_flux.size(); ++i) {
        std::vector<double> z(static_cast<std::size_t>(g.n_t * d), 0.0);
        for (int t = 1; t < g.n_t; ++t)
            for (int j = 0; j < d; ++j) {
                const auto at = static_cast<std::size_t>(t * d + j);
                z[at] = z[at - static_cast<std::size_t>(d)] +
                        g.tau * (cond_flux[i][at] - ahom(j, static_cast<Eigen::Index>(i)));
            }
        zeta.push_back(std::move(z));
    }
    return zeta;
}

ExtendedCorrector build_corrector(const CoefficientField& a, const SolverConfig& cfg,
                                  const CorrectorOptions& options) {
    ExtendedCorrector c;
    c.grid = a.grid();
    c.lambda = a.lambda();
    c.phi = build_phi(a, cfg, &c.stats);
    c.q = flux(a, c.phi);
    c.ahom = homogenized(c.q, a.lambda());
    c.cond_flux = conditional_flux(c.q);
    c.zeta = build_zeta(c.grid, c.cond_flux, c.ahom.ahom);
    if (options.potentials) {
        c.psi = build_psi(c.q);
        c.sigma = build_sigma(c.q, c.psi);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Verification

bool IdentityReport::all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const IdentityItem& it) { return it.pass; });
}

const IdentityItem& IdentityReport::item(const std::string& name) const {
    for (const auto& it : items)
        if (it.name == name) return it;
    throw DomainError("no identity item named " + name);
}

namespace {

double slice_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double max_abs_mean_per_slice(const SpaceTimeField& f) {
    const Grid& g = f.grid();
    double worst = 0.0;
    for (int c = 0; c < f.components(); ++c)
        for (int t = 0; t < g.n_t; ++t) {
            double s = 0.0;
            for (double x : f.slice(t, c)) s += x;
            worst = std::max(worst, std::abs(s / static_cast<double>(g.spatial_size())));
        }
    return worst;
}

}  // namespace

IdentityReport verify(const CoefficientField& a, const ExtendedCorrector& c, const VerifyThresholds& th,
                      double theta) {
    IdentityReport r;
    const Grid& g = c.grid;
    const int d = g.d;
    const std::size_t N = g.spatial_size();
    auto add = [&](std::string name, double value, double threshold, bool pass) {
        r.items.push_back({std::move(name), value, threshold, pass});
    };

    double eq = 0.0;
    for (int i = 0; i < d; ++i) {
        std::vector<double> e(static_cast<std::size_t>(d), 0.0);
        e[static_cast<std::size_t>(i)] = 1.0;
        eq = std::max(eq, cell_residual(a, c.phi[static_cast<std::size_t>(i)], e, theta));
    }
    add("corrector_equation", eq, th.corrector_equation, eq <= th.corrector_equation);

    double phi_mean = 0.0;
    for (const auto& p : c.phi) {
        double s = 0.0;
        for (double x : p.data()) s += x;
        phi_mean = std::max(phi_mean, std::abs(s / static_cast<double>(p.data().size())));
    }
    add("phi_mean", phi_mean, th.normalization, phi_mean <= th.normalization);

    if (c.has_potentials()) {
        double pois = 0.0, divid = 0.0, skew = 0.0, psi_mean = 0.0, sigma_mean = 0.0;
        for (int i = 0; i < d; ++i) {
            const auto& qi = c.q[static_cast<std::size_t>(i)];
            const auto& pi = c.psi[static_cast<std::size_t>(i)];
            const auto& si = c.sigma[static_cast<std::size_t>(i)];
            const SpaceTimeField dq = div(qi);
            const SpaceTimeField lp = laplacian(pi);
            std::vector<double> gj(N), ds(N), tmp(N);
            for (int t = 0; t < g.n_t; ++t) {
                const auto a1 = lp.slice(t), b1 = dq.slice(t);
                double num = 0.0;
                for (std::size_t x = 0; x < N; ++x) num += (a1[x] - b1[x]) * (a1[x] - b1[x]);
                const double den = slice_norm(b1);
                pois = std::max(pois, den > 0.0 ? std::sqrt(num) / den : std::sqrt(num));

                for (int j = 0; j < d; ++j) {
                    forward_diff(g, pi.slice(t), j, tmp);
                    const auto qj = qi.slice(t, j);
                    const double cj = c.cond_flux[static_cast<std::size_t>(i)][static_cast<std::size_t>(t * d + j)];
                    for (std::size_t x = 0; x < N; ++x) gj[x] = qj[x] - tmp[x] - cj;
                    std::fill(ds.begin(), ds.end(), 0.0);
                    for (int k = 0; k < d; ++k) backward_diff(g, si.slice(t, j * d + k), k, ds, true);
                    double rn = 0.0, gn = 0.0;
                    for (std::size_t x = 0; x < N; ++x) {
                        rn += (ds[x] - gj[x]) * (ds[x] - gj[x]);
                        gn += (qj[x] - tmp[x]) * (qj[x] - tmp[x]);
                    }
                    divid = std::max(divid, gn > 0.0 ? std::sqrt(rn / gn) : std::sqrt(rn));
                    for (int k = 0; k < d; ++k) {
                        const auto sjk = si.slice(t, j * d + k), skj = si.slice(t, k * d + j);
                        for (std::size_t x = 0; x < N; ++x) skew = std::max(skew, std::abs(sjk[x] + skj[x]));
                    }
                }
            }
            psi_mean = std::max(psi_mean, max_abs_mean_per_slice(pi));
            sigma_mean = std::max(sigma_mean, max_abs_mean_per_slice(si));
        }
        add("psi_poisson", pois, th.psi_poisson, pois <= th.psi_poisson);
        add("sigma_divergence", divid, th.sigma_divergence, divid <= th.sigma_divergence);
        add("sigma_skew", skew, 0.0, skew == 0.0);
        add("psi_mean", psi_mean, th.normalization, psi_mean <= th.normalization);
        add("sigma_mean", sigma_mean, th.normalization, sigma_mean <= th.normalization);
    }

    double zrel = 0.0, zstart = 0.0, zend = 0.0, cscale = 0.0;
    for (const auto& ci : c.cond_flux)
        for (double v : ci) cscale = std::max(cscale, std::abs(v));
    cscale = std::max(cscale, 1e-300);
    for (int i = 0; i < d; ++i) {
        const auto& z = c.zeta[static_cast<std::size_t>(i)];
        const auto& ci = c.cond_flux[static_cast<std::size_t>(i)];
        for (int j = 0; j < d; ++j) {
            zstart = std::max(zstart, std::abs(z[static_cast<std::size_t>(j)]));
            zend = std::max(zend, std::abs(c.zeta_period_end(i, j)));
            for (int t = 1; t < g.n_t; ++t) {
                const auto at = static_cast<std::size_t>(t * d + j);
                const double lhs = (z[at] - z[at - static_cast<std::size_t>(d)]) / g.tau;
                const double rhs = ci[at] - c.ahom.ahom(j, i);
                zrel = std::max(zrel, std::abs(lhs - rhs) / cscale);
            }
        }
    }
    add("zeta_relation", zrel, th.zeta_relation, zrel <= th.zeta_relation);
    add("zeta_start", zstart, 0.0, zstart == 0.0);
    add("zeta_period", zend, th.normalization, zend <= th.normalization);

    const auto m = c.ahom.margins();
    add("ahom_lower_margin", m.lower, 0.0, m.lower > 0.0);
    add("ahom_upper_margin", m.upper, 0.0, m.upper > 0.0);
    return r;
}

void save_corrector(const ExtendedCorrector& c, const IdentityReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const int d = c.grid.d;
    for (int i = 0; i < d; ++i) {
        const auto s = std::to_string(i + 1);
        write_field(c.phi[static_cast<std::size_t>(i)], dir / ("phi_" + s + ".pshf"));
        write_field(c.q[static_cast<std::size_t>(i)], dir / ("q_" + s + ".pshf"));
        if (c.has_potentials()) {
            write_field(c.psi[static_cast<std::size_t>(i)], dir / ("psi_" + s + ".pshf"));
            write_field(c.sigma[static_cast<std::size_t>(i)], dir / ("sigma_" + s + ".pshf"));
        }
    }
    std::ofstream z(dir / "zeta.csv");
    z << "level,time";
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) z << ",zeta_" << i + 1 << j + 1;
    z << '\n' << std::setprecision(17);
    for (int t = 0; t < c.grid.n_t; ++t) {
        z << t << ',' << t * c.grid.tau;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) z << ',' << c.zeta[static_cast<std::size_t>(i)][static_cast<std::size_t>(t * d + j)];
        z << '\n';
    }

    std::ofstream m(dir / "manifest.txt");
    m << std::setprecision(17);
    m << "d = " << d << "\nn = " << c.grid.n << "\nn_t = " << c.grid.n_t << "\nh = " << c.grid.h
      << "\ntau = " << c.grid.tau << "\nlambda = " << c.lambda << '\n';
    for (int r = 0; r < d; ++r)
        for (int k = 0; k < d; ++k) m << "ahom_" << r + 1 << k + 1 << " = " << c.ahom.ahom(r, k) << '\n';
    for (const auto& it : report.items)
        m << "residual." << it.name << " = " << it.value << "\ngate." << it.name << " = "
          << (it.pass ? "pass" : "fail") << '\n';
}

}  // namespace parahom
