#include "parahom/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "parahom/kernels.hpp"

namespace parahom {

void SolverConfig::validate() const {
    if (!(tol > 0.0)) throw DomainError("solver tol must be positive");
    if (max_iter < 1) throw DomainError("solver max_iter must be at least 1");
    if (!(period_tol > 0.0)) throw DomainError("solver period_tol must be positive");
    if (anderson_depth < 0) throw DomainError("anderson_depth must be non-negative");
    if (!(theta >= 0.5 && theta <= 1.0)) throw DomainError("theta must lie in [0.5, 1]");
}

// ---------------------------------------------------------------------------
// Coefficient lookup

CoefficientSampler CoefficientSampler::of(const CoefficientField& a) {
    CoefficientSampler s;
    s.field = &a;
    return s;
}

CoefficientSampler CoefficientSampler::window(const CoefficientField& a, const Grid& local) {
    const Grid& host = a.grid();
    if (local.d != host.d) throw DomainError("window dimension mismatch");
    CoefficientSampler s;
    s.field = &a;
    s.level0 = local.origin_t;
    const std::size_t N = local.spatial_size();
    s.map.resize(N);
    for (std::size_t x = 0; x < N; ++x) {
        Index j = local.unravel(x);
        for (int k = 0; k < local.d; ++k) j[k] += local.origin[k];
        s.map[x] = host.ravel_wrapped(j);
    }
    return s;
}

CoefficientSampler CoefficientSampler::tiled(const CoefficientField& a, const Grid& target) {
    const Grid& src = a.grid();
    if (target.d != src.d || target.n % src.n != 0)
        throw DomainError("tiling requires the target size to be a multiple of the source size");
    CoefficientSampler s;
    s.field = &a;
    const std::size_t N = target.spatial_size();
    s.map.resize(N);
    for (std::size_t x = 0; x < N; ++x) s.map[x] = src.ravel_wrapped(target.unravel(x));
    return s;
}

CoefficientSampler CoefficientSampler::uniform(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > 3) throw DomainError("constant coefficient must be d x d");
    CoefficientSampler s;
    s.constant = m;
    return s;
}

int CoefficientSampler::dim() const {
    return field ? field->grid().d : static_cast<int>(constant.rows());
}

bool CoefficientSampler::diagonal() const {
    if (field) return field->diagonal();
    for (int r = 0; r < constant.rows(); ++r)
        for (int c = 0; c < constant.cols(); ++c)
            if (r != c && constant(r, c) != 0.0) return false;
    return true;
}

double CoefficientSampler::entry(int r, int c, int level, std::size_t x) const {
    if (!field) return constant(r, c);
    return field->entry(r, c, field->grid().wrap_t(level0 + level), map.empty() ? x : map[x]);
}

// ---------------------------------------------------------------------------
// Per-level operator

StepOperator::StepOperator(const Grid& g) : g_(g), N_(g.spatial_size()) {}

void StepOperator::load(const CoefficientSampler& a, int level) {
    const int d = g_.d;
    if (a.dim() != d) throw DomainError("coefficient dimension does not match the grid");
    diag_ = a.diagonal();
    has_skew_ = false;
    if (diag_) {
        w_.resize(static_cast<std::size_t>(d) * N_);
        for (int k = 0; k < d; ++k) {
            double* w = w_.data() + static_cast<std::size_t>(k) * N_;
            for (std::size_t x = 0; x < N_; ++x) w[x] = a.entry(k, k, level, x);
            if (!g_.periodic) {
                const std::size_t s = g_.stride(k), B = s * static_cast<std::size_t>(g_.n);
                for (std::size_t b = 0; b < N_; b += B) std::fill(w + b + B - s, w + b + B, 0.0);
            }
        }
        return;
    }
    sym_.resize(static_cast<std::size_t>(d * d) * N_);
    skew_.resize(static_cast<std::size_t>(d * d) * N_);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double* sy = sym_.data() + static_cast<std::size_t>(r * d + c) * N_;
            double* sk = skew_.data() + static_cast<std::size_t>(r * d + c) * N_;
            for (std::size_t x = 0; x < N_; ++x) {
                const double arc = a.entry(r, c, level, x), acr = a.entry(c, r, level, x);
                sy[x] = 0.5 * (arc + acr);
                sk[x] = 0.5 * (arc - acr);
                if (sk[x] != 0.0) has_skew_ = true;
            }
        }
}

void StepOperator::apply(std::span<const double> u, std::span<double> y, Part part) const {
    const int d = g_.d;
    const double inv_h2 = 1.0 / (g_.h * g_.h);
    std::fill(y.begin(), y.end(), 0.0);
    if (diag_) {
        if (part == Part::skew) return;
        const auto& K = kernels::active();
        for (int k = 0; k < d; ++k) {
            const std::size_t s = g_.stride(k), B = s * static_cast<std::size_t>(g_.n);
            const double* wk = w_.data() + static_cast<std::size_t>(k) * N_;
            for (std::size_t b = 0; b < N_; b += B) {
                const double* ub = u.data() + b;
                const double* w = wk + b;
                double* yb = y.data() + b;
                K.axis_flux(ub, ub + s, ub + B - s, w, w + B - s, inv_h2, yb, s);
                K.axis_flux(ub + s, ub + 2 * s, ub, w + s, w, inv_h2, yb + s, B - 2 * s);
                K.axis_flux(ub + B - s, ub, ub + B - 2 * s, w + B - s, w + B - 2 * s, inv_h2,
                            yb + B - s, s);
            }
        }
        return;
    }
    scratch_.resize(2 * static_cast<std::size_t>(d) * N_);
    std::span<double> gr(scratch_.data(), static_cast<std::size_t>(d) * N_);
    std::span<double> fl(scratch_.data() + static_cast<std::size_t>(d) * N_, static_cast<std::size_t>(d) * N_);
    for (int k = 0; k < d; ++k) forward_diff(g_, u, k, gr.subspan(static_cast<std::size_t>(k) * N_, N_));
    std::fill(fl.begin(), fl.end(), 0.0);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            const std::size_t o = static_cast<std::size_t>(j * d + k) * N_;
            const double* gk = gr.data() + static_cast<std::size_t>(k) * N_;
            double* fj = fl.data() + static_cast<std::size_t>(j) * N_;
            for (std::size_t x = 0; x < N_; ++x) {
                double m = 0.0;
                if (part != Part::skew) m += sym_[o + x];
                if (part != Part::sym) m += skew_[o + x];
                fj[x] += m * gk[x];
            }
        }
    for (int j = 0; j < d; ++j)
        backward_diff(g_, fl.subspan(static_cast<std::size_t>(j) * N_, N_), j, y, true);
    for (double& v : y) v = -v;
}

void StepOperator::source(std::span<const double> xi, std::span<double> out) const {
    const int d = g_.d;
    scratch_.resize(static_cast<std::size_t>(d) * N_);
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    for (int j = 0; j < d; ++j) {
        double* fj = scratch_.data() + static_cast<std::size_t>(j) * N_;
        for (int i = 0; i < d; ++i) {
            if (xi[static_cast<std::size_t>(i)] == 0.0) continue;
            const double xv = xi[static_cast<std::size_t>(i)];
            if (diag_) {
                if (i != j) continue;
                const double* w = w_.data() + static_cast<std::size_t>(j) * N_;
                for (std::size_t x = 0; x < N_; ++x) fj[x] += w[x] * xv;
            } else {
                const std::size_t o = static_cast<std::size_t>(j * d + i) * N_;
                for (std::size_t x = 0; x < N_; ++x) fj[x] += (sym_[o + x] + skew_[o + x]) * xv;
            }
        }
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < d; ++j)
        backward_diff(g_, std::span<const double>(scratch_).subspan(static_cast<std::size_t>(j) * N_, N_), j,
                      out, true);
}

void StepOperator::flux(std::span<const double> u, std::span<const double> xi, std::span<double> q) const {
    const int d = g_.d;
    std::vector<double> gr(static_cast<std::size_t>(d) * N_);
    for (int k = 0; k < d; ++k)
        forward_diff(g_, u, k, std::span<double>(gr).subspan(static_cast<std::size_t>(k) * N_, N_));
    std::fill(q.begin(), q.end(), 0.0);
    for (int j = 0; j < d; ++j) {
        double* qj = q.data() + static_cast<std::size_t>(j) * N_;
        for (int k = 0; k < d; ++k) {
            const double* gk = gr.data() + static_cast<std::size_t>(k) * N_;
            const double xk = xi[static_cast<std::size_t>(k)];
            if (diag_) {
                if (k != j) continue;
                const double* w = w_.data() + static_cast<std::size_t>(j) * N_;
                for (std::size_t x = 0; x < N_; ++x) qj[x] += w[x] * (gk[x] + xk);
            } else {
                const std::size_t o = static_cast<std::size_t>(j * d + k) * N_;
                for (std::size_t x = 0; x < N_; ++x) qj[x] += (sym_[o + x] + skew_[o + x]) * (gk[x] + xk);
            }
        }
    }
}

void StepOperator::diagonal(double c0, double theta, std::span<double> out) const {
    const int d = g_.d;
    const double inv_h2 = 1.0 / (g_.h * g_.h);
    std::fill(out.begin(), out.end(), 0.0);
    for (int k = 0; k < d; ++k) {
        const double* w = diag_ ? w_.data() + static_cast<std::size_t>(k) * N_
                                : sym_.data() + static_cast<std::size_t>(k * d + k) * N_;
        const std::size_t s = g_.stride(k), B = s * static_cast<std::size_t>(g_.n);
        for (std::size_t b = 0; b < N_; b += B)
            for (std::size_t i = 0; i < B; ++i) {
                const std::size_t back = i >= s ? i - s : i + B - s;
                out[b + i] += w[b + i] + w[b + back];
            }
    }
    for (double& v : out) v = c0 + theta * inv_h2 * v;
}

// ---------------------------------------------------------------------------
// Preconditioned conjugate gradients on the unmasked nodes

namespace {

double norm2(std::span<const double> v) {
    return std::sqrt(kernels::active().dot(v.data(), v.data(), v.size()));
}

void apply_mask(std::span<double> v, const std::vector<std::uint8_t>& mask) {
    if (mask.empty()) return;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (mask[i]) v[i] = 0.0;
}

class Cg {
public:
    explicit Cg(std::size_t n) : r_(n), z_(n), p_(n), ap_(n) {}

    // Solves A x = b on unmasked nodes; masked entries of x stay untouched.
    // Returns the iteration count and stores the relative residual.
    int solve(const std::function<void(std::span<const double>, std::span<double>)>& A,
              std::span<const double> b, std::span<double> x, std::span<const double> dinv,
              const std::vector<std::uint8_t>& mask, double tol, int max_iter, double& rel) {
        const auto& K = kernels::active();
        const std::size_t n = x.size();
        A(x, ap_);
        for (std::size_t i = 0; i < n; ++i) r_[i] = b[i] - ap_[i];
        apply_mask(r_, mask);
        std::vector<double> bm(b.begin(), b.end());
        apply_mask(bm, mask);
        std::vector<double> ax(ap_);
        apply_mask(ax, mask);
        const double ref = std::max(norm2(bm), norm2(ax));
        double rn = norm2(r_);
        if (ref == 0.0 || rn <= tol * ref) {
            rel = ref == 0.0 ? 0.0 : rn / ref;
            return 0;
        }
        for (std::size_t i = 0; i < n; ++i) z_[i] = dinv[i] * r_[i];
        std::copy(z_.begin(), z_.end(), p_.begin());
        double rz = K.dot(r_.data(), z_.data(), n);
        for (int it = 1; it <= max_iter; ++it) {
            A(p_, ap_);
            apply_mask(ap_, mask);
            const double pap = K.dot(p_.data(), ap_.data(), n);
            if (!(pap > 0.0)) throw SolverError("CG breakdown: operator not positive definite");
            const double alpha = rz / pap;
            K.axpy(alpha, p_.data(), x.data(), n);
            K.axpy(-alpha, ap_.data(), r_.data(), n);
            rn = norm2(r_);
            if (rn <= tol * ref) {
                rel = rn / ref;
                return it;
            }
            for (std::size_t i = 0; i < n; ++i) z_[i] = dinv[i] * r_[i];
            const double rz_new = K.dot(r_.data(), z_.data(), n);
            K.xpby(z_.data(), rz_new / rz, p_.data(), n);
            rz = rz_new;
        }
        rel = rn / ref;
        throw SolverError("CG did not converge in " + std::to_string(max_iter) +
                          " iterations (relative residual " + std::to_string(rel) + ")");
    }

private:
    std::vector<double> r_, z_, p_, ap_;
};

// One theta-scheme step per call: (c0 + theta K) u_k = c0 u_{k-1} - (1-theta) K u_{k-1} + f,
// with K and f taken from the coefficient of the step interval.
class Stepper {
public:
    Stepper(const Grid& g, const SolverConfig& cfg, std::vector<std::uint8_t> mask, double cg_tol)
        : g_(g), cfg_(cfg), op_(g), mask_(std::move(mask)), cg_(g.spatial_size()), cg_tol_(cg_tol),
          N_(g.spatial_size()), rhs_(N_), dinv_(N_), tmp_(N_), lag_(N_) {}

    // `out` holds the boundary values (when masked) and the initial guess.
    void step(const CoefficientSampler& a, int level, std::span<const double> prev,
              std::span<const double> xi, std::span<double> out, SolveStats& st) {
        op_.load(a, level);
        const double c0 = 1.0 / g_.tau, th = cfg_.theta;
        for (std::size_t x = 0; x < N_; ++x) rhs_[x] = c0 * prev[x];
        if (th < 1.0) {
            op_.apply(prev, tmp_);
            kernels::active().axpy(-(1.0 - th), tmp_.data(), rhs_.data(), N_);
        }
        if (!xi.empty()) {
            op_.source(xi, tmp_);
            kernels::active().axpy(1.0, tmp_.data(), rhs_.data(), N_);
        }
        op_.diagonal(c0, th, dinv_);
        for (double& v : dinv_) v = 1.0 / v;
        auto A = [&](std::span<const double> v, std::span<double> y) {
            op_.apply(v, y, StepOperator::Part::sym);
            for (std::size_t x = 0; x < N_; ++x) y[x] = c0 * v[x] + th * y[x];
        };
        double rel = 0.0;
        if (!op_.has_skew()) {
            st.cg_iterations += cg_.solve(A, rhs_, out, dinv_, mask_, cg_tol_, cfg_.max_iter, rel);
        } else {
            std::vector<double> eff(N_);
            for (int sweep = 0;; ++sweep) {
                if (sweep >= cfg_.max_iter) throw SolverError("skew-part splitting did not converge");
                std::copy(out.begin(), out.end(), lag_.begin());
                op_.apply(lag_, tmp_, StepOperator::Part::skew);
                for (std::size_t x = 0; x < N_; ++x) eff[x] = rhs_[x] - th * tmp_[x];
                st.cg_iterations += cg_.solve(A, eff, out, dinv_, mask_, cg_tol_, cfg_.max_iter, rel);
                double diff = 0.0, ref = 0.0;
                for (std::size_t x = 0; x < N_; ++x) {
                    diff += (out[x] - lag_[x]) * (out[x] - lag_[x]);
                    ref += out[x] * out[x];
                }
                if (std::sqrt(diff) <= cg_tol_ * std::sqrt(ref) || diff == 0.0) break;
            }
        }
        st.max_cg_residual = std::max(st.max_cg_residual, rel);
        ++st.steps;
    }

    StepOperator& op() { return op_; }

private:
    Grid g_;
    SolverConfig cfg_;
    StepOperator op_;
    std::vector<std::uint8_t> mask_;
    Cg cg_;
    double cg_tol_;
    std::size_t N_;
    std::vector<double> rhs_, dinv_, tmp_, lag_;
};

void remove_mean(std::span<double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    const double m = s / static_cast<double>(v.size());
    for (double& x : v) x -= m;
}

// Residual r = c0 (u_k - u_{k-1}) + theta K u_k + (1-theta) K u_{k-1} - f_k and
// the three reference norms, accumulated into sums of squares.
struct ResidualSums {
    double r = 0.0, dt = 0.0, k = 0.0, f = 0.0;
    double relative() const {
        const double ref = std::sqrt(dt) + std::sqrt(k) + std::sqrt(f);
        return ref == 0.0 ? 0.0 : std::sqrt(r) / ref;
    }
};

void accumulate_residual(StepOperator& op, const CoefficientSampler& a, int level,
                         std::span<const double> cur, std::span<const double> prev,
                         std::span<const double> xi, double theta, double tau,
                         const std::vector<std::uint8_t>& mask, ResidualSums& acc) {
    const std::size_t N = cur.size();
    op.load(a, level);
    std::vector<double> kc(N), kp(N), f(N, 0.0);
    op.apply(cur, kc);
    if (theta < 1.0) op.apply(prev, kp);
    if (!xi.empty()) op.source(xi, f);
    for (std::size_t x = 0; x < N; ++x) {
        if (!mask.empty() && mask[x]) continue;
        const double dt = (cur[x] - prev[x]) / tau;
        const double kx = theta * kc[x] + (theta < 1.0 ? (1.0 - theta) * kp[x] : 0.0);
        const double r = dt + kx - f[x];
        acc.r += r * r;
        acc.dt += dt * dt;
        acc.k += kx * kx;
        acc.f += f[x] * f[x];
    }
}

}  // namespace

std::vector<std::uint8_t> boundary_mask(const Grid& g) {
    const std::size_t N = g.spatial_size();
    std::vector<std::uint8_t> mask(N, 0);
    for (std::size_t x = 0; x < N; ++x) {
        const Index j = g.unravel(x);
        for (int k = 0; k < g.d; ++k)
            if (j[k] == 0 || j[k] == g.n - 1) mask[x] = 1;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Cell problem

SpaceTimeField parabolic_cell(const CoefficientField& a, std::span<const double> xi,
                              const SolverConfig& cfg, SolveStats* stats,
                              std::span<const double> initial) {
    cfg.validate();
    const Grid& g = a.grid();
    if (!g.periodic) throw DomainError("cell problem needs a periodic grid");
    if (xi.size() != static_cast<std::size_t>(g.d)) throw DomainError("direction has wrong dimension");
    const std::size_t N = g.spatial_size();
    const double inner_tol = std::max(1e-14, 1e-2 * std::min(cfg.tol, cfg.period_tol));
    const CoefficientSampler sampler = CoefficientSampler::of(a);
    Stepper stepper(g, cfg, {}, inner_tol);
    SolveStats st;

    SpaceTimeField phi(g, Rank::scalar);
    std::vector<double> s(N, 0.0), s_old(N, 0.0), old_prev(N), prev(N);
    if (!initial.empty()) {
        if (initial.size() != N) throw DomainError("initial state has wrong size");
        std::copy(initial.begin(), initial.end(), s.begin());
        remove_mean(s);
    }
    const auto& K = kernels::active();

    // Anderson history: differences of states and of period-map residuals.
    const int depth = cfg.anderson_depth;
    std::vector<std::vector<double>> dX, dG;
    std::vector<double> g_prev, x_prev;
    bool have_traj = false;
    bool converged = false;

    for (int period = 1; period <= cfg.max_iter; ++period) {
        std::copy(s.begin(), s.end(), prev.begin());
        std::copy(s_old.begin(), s_old.end(), old_prev.begin());
        for (int k = 0; k < g.n_t; ++k) {
            auto out = phi.slice(k);
            std::vector<double> old_k(out.begin(), out.end());
            if (have_traj) {
                for (std::size_t x = 0; x < N; ++x) out[x] = old_k[x] + (prev[x] - old_prev[x]);
            } else {
                std::copy(prev.begin(), prev.end(), out.begin());
            }
            stepper.step(sampler, k, prev, xi, out, st);
            remove_mean(out);
            std::copy(out.begin(), out.end(), prev.begin());
            old_prev.swap(old_k);
        }
        have_traj = true;
        s_old = s;

        const auto Ps = phi.slice(g.n_t - 1);
        std::vector<double> gvec(N);
        for (std::size_t x = 0; x < N; ++x) gvec[x] = Ps[x] - s[x];
        const double pn = std::sqrt(K.dot(Ps.data(), Ps.data(), N));
        const double gn = std::sqrt(K.dot(gvec.data(), gvec.data(), N));
        st.periods = period;
        st.period_change = pn == 0.0 ? gn : gn / pn;
        if (gn == 0.0 || st.period_change <= cfg.period_tol) {
            converged = true;
            break;
        }

        std::vector<double> next(N);
        if (depth > 0 && !g_prev.empty()) {
            std::vector<double> dx(N), dg(N);
            for (std::size_t x = 0; x < N; ++x) {
                dx[x] = s[x] - x_prev[x];
                dg[x] = gvec[x] - g_prev[x];
            }
            dX.push_back(std::move(dx));
            dG.push_back(std::move(dg));
            if (static_cast<int>(dX.size()) > depth) {
                dX.erase(dX.begin());
                dG.erase(dG.begin());
            }
        }
        x_prev = s;
        g_prev = gvec;
        if (dX.empty()) {
            for (std::size_t x = 0; x < N; ++x) next[x] = s[x] + gvec[x];
        } else {
            const auto m = static_cast<Eigen::Index>(dG.size());
            Matrix G(static_cast<Eigen::Index>(N), m);
            for (Eigen::Index c = 0; c < m; ++c)
                for (std::size_t x = 0; x < N; ++x) G(static_cast<Eigen::Index>(x), c) = dG[static_cast<std::size_t>(c)][x];
            const Eigen::Map<const Vector> gv(gvec.data(), static_cast<Eigen::Index>(N));
            const Vector gamma = G.completeOrthogonalDecomposition().solve(gv);
            for (std::size_t x = 0; x < N; ++x) {
                double corr = 0.0;
                for (Eigen::Index c = 0; c < m; ++c)
                    corr += (dX[static_cast<std::size_t>(c)][x] + dG[static_cast<std::size_t>(c)][x]) * gamma(c);
                next[x] = s[x] + gvec[x] - corr;
            }
        }
        remove_mean(next);
        s = std::move(next);
    }
    if (!converged)
        throw SolverError("cell problem did not reach period_tol within " + std::to_string(cfg.max_iter) +
                          " periods (last change " + std::to_string(st.period_change) + ")");
    st.residual = cell_residual(a, phi, xi, cfg.theta);
    if (stats) *stats = st;
    return phi;
}

SpaceTimeField parabolic_cell(const CoefficientField& a, int direction, const SolverConfig& cfg,
                              SolveStats* stats) {
    const int d = a.grid().d;
    if (direction < 0 || direction >= d) throw DomainError("direction out of range");
    std::vector<double> xi(static_cast<std::size_t>(d), 0.0);
    xi[static_cast<std::size_t>(direction)] = 1.0;
    return parabolic_cell(a, xi, cfg, stats);
}

double cell_residual(const CoefficientField& a, const SpaceTimeField& phi, std::span<const double> xi,
                     double theta) {
    const Grid& g = a.grid();
    if (!phi.grid().same_geometry(g)) throw DomainError("corrector grid does not match the coefficient grid");
    StepOperator op(g);
    const auto sampler = CoefficientSampler::of(a);
    ResidualSums acc;
    for (int k = 0; k < g.n_t; ++k)
        accumulate_residual(op, sampler, k, phi.slice(k), phi.slice(g.wrap_t(k - 1)), xi, theta, g.tau, {}, acc);
    return acc.relative();
}

// ---------------------------------------------------------------------------
// Initial-boundary value problems

SpaceTimeField evolve(const CoefficientSampler& a, const Grid& g, const SpaceTimeField& data,
                      bool dirichlet, const SolverConfig& cfg, SolveStats* stats) {
    cfg.validate();
    if (data.rank() != Rank::scalar || data.grid().d != g.d || data.grid().n != g.n ||
        data.grid().n_t != g.n_t)
        throw DomainError("initial/boundary data does not match the grid");
    if (dirichlet && g.periodic) throw DomainError("Dirichlet data needs a window grid");
    const std::size_t N = g.spatial_size();
    auto mask = dirichlet ? boundary_mask(g) : std::vector<std::uint8_t>{};
    Stepper stepper(g, cfg, mask, cfg.tol);
    SolveStats st;
    SpaceTimeField u(g, Rank::scalar);
    std::copy(data.slice(0).begin(), data.slice(0).end(), u.slice(0).begin());
    for (int k = 1; k < g.n_t; ++k) {
        auto prev = u.slice(k - 1);
        auto out = u.slice(k);
        std::copy(prev.begin(), prev.end(), out.begin());
        if (dirichlet) {
            const auto bk = data.slice(k);
            for (std::size_t x = 0; x < N; ++x)
                if (mask[x]) out[x] = bk[x];
        }
        stepper.step(a, k, prev, {}, out, st);
    }
    st.residual = caloric_residual(a, u, cfg.theta);
    if (stats) *stats = st;
    return u;
}

SpaceTimeField parabolic_dirichlet(const CoefficientField& a, const Cylinder& C, const SpaceTimeField& data,
                                   const SolverConfig& cfg, SolveStats* stats) {
    C.check_fits(a.grid(), true);
    const Grid local = C.local_grid(a.grid());
    if (data.grid().n != local.n || data.grid().n_t != local.n_t || data.grid().d != local.d)
        throw DomainError("boundary data does not live on the cylinder window");
    SpaceTimeField moved(local, Rank::scalar);
    std::copy(data.data().begin(), data.data().end(), moved.data().begin());
    return evolve(CoefficientSampler::window(a, local), local, moved, true, cfg, stats);
}

SpaceTimeField parabolic_dirichlet(const Matrix& a, const Grid& local, const SpaceTimeField& data,
                                   const SolverConfig& cfg, SolveStats* stats) {
    if (local.periodic) throw DomainError("Dirichlet problem needs a window grid");
    if (a.rows() != local.d) throw DomainError("constant coefficient has the wrong dimension");
    return evolve(CoefficientSampler::uniform(a), local, data, true, cfg, stats);
}

double caloric_residual(const CoefficientSampler& a, const SpaceTimeField& u, double theta) {
    const Grid& g = u.grid();
    StepOperator op(g);
    const auto mask = g.periodic ? std::vector<std::uint8_t>{} : boundary_mask(g);
    ResidualSums acc;
    for (int k = 1; k < g.n_t; ++k)
        accumulate_residual(op, a, k, u.slice(k), u.slice(k - 1), {}, theta, g.tau, mask, acc);
    return acc.relative();
}

}  // namespace parahom
