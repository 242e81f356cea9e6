#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "parahom/coefficient.hpp"

namespace parahom {

struct SolverConfig {
    double tol = 1e-10;         // relative residual per linear solve
    int max_iter = 2000;        // caps CG iterations and cell-problem periods
    double period_tol = 1e-10;  // relative L2 change between consecutive periods
    int anderson_depth = 12;    // 0 disables acceleration of the period map
    double theta = 1.0;         // 1 = implicit Euler, 0.5 = Crank-Nicolson

    void validate() const;
};

// Where a solve reads its coefficient: a constant matrix, or a torus field
// looked up through a spatial index map and a time offset. Solution level k
// reads field level wrap(level0 + k).
struct CoefficientSampler {
    const CoefficientField* field = nullptr;
    Matrix constant;
    std::vector<std::size_t> map;  // target node -> field node; empty = identity
    int level0 = 0;

    static CoefficientSampler of(const CoefficientField& a);
    // Window grid produced by Cylinder::local_grid on the torus of a.
    static CoefficientSampler window(const CoefficientField& a, const Grid& local);
    // Periodic tiling of a small torus field under a larger torus grid with the
    // same number of levels per coefficient period.
    static CoefficientSampler tiled(const CoefficientField& a, const Grid& target);
    static CoefficientSampler uniform(const Matrix& m);

    int dim() const;
    bool diagonal() const;
    double entry(int r, int c, int level, std::size_t x) const;
};

// K = -div(a grad .) on one time level, split into symmetric and skew parts.
class StepOperator {
public:
    enum class Part { sym, skew, full };

    explicit StepOperator(const Grid& g);
    void load(const CoefficientSampler& a, int level);

    void apply(std::span<const double> u, std::span<double> y, Part part = Part::full) const;
    // div(a xi) for a constant vector xi.
    void source(std::span<const double> xi, std::span<double> out) const;
    // q = a (grad u + xi), component-major (d blocks of spatial size).
    void flux(std::span<const double> u, std::span<const double> xi, std::span<double> q) const;
    // Jacobi diagonal of c0 I + theta K_sym.
    void diagonal(double c0, double theta, std::span<double> out) const;
    bool has_skew() const { return has_skew_; }
    const Grid& grid() const { return g_; }

private:
    Grid g_;
    std::size_t N_;
    bool diag_ = true;
    bool has_skew_ = false;
    std::vector<double> w_;     // diag mode: d edge-weight arrays (a_kk)
    std::vector<double> sym_;   // general mode: d*d arrays
    std::vector<double> skew_;  // general mode: d*d arrays
    mutable std::vector<double> scratch_;
};

struct SolveStats {
    int steps = 0;
    long cg_iterations = 0;
    double max_cg_residual = 0.0;
    int periods = 0;
    double period_change = 0.0;
    double residual = 0.0;  // relative residual of the discrete equation
};

// Zero-mean solution of laplacian(psi) = f on one torus slice by Fourier
// diagonalization of the discrete Laplacian. Plans are made once per instance.
class PoissonTorus {
public:
    explicit PoissonTorus(const Grid& g);
    ~PoissonTorus();
    PoissonTorus(const PoissonTorus&) = delete;
    PoissonTorus& operator=(const PoissonTorus&) = delete;

    // Throws DomainError when |mean f| > 1e-8 max(1, |f|_inf); the mean is
    // removed before solving.
    void solve(std::span<const double> f, std::span<double> out) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<double> poisson_torus(const Grid& g, std::span<const double> f);
// Slice-by-slice solve of a scalar space-time field.
SpaceTimeField poisson_torus(const SpaceTimeField& f);

// Space-time periodic corrector in direction xi:
//   phi_t = div(a (grad phi + xi)),
// marched period by period from `initial` (the state at level n_t-1, zero by
// default) with Anderson acceleration of the period map, until the relative
// period-to-period change is below period_tol. The result has zero mean on
// every slice. Throws SolverError when max_iter periods do not suffice.
SpaceTimeField parabolic_cell(const CoefficientField& a, std::span<const double> xi,
                              const SolverConfig& cfg, SolveStats* stats = nullptr,
                              std::span<const double> initial = {});
SpaceTimeField parabolic_cell(const CoefficientField& a, int direction, const SolverConfig& cfg,
                              SolveStats* stats = nullptr);

// Relative residual of the periodic theta-scheme for the cell problem:
// |phi_t + K phi - div(a xi)| / (|phi_t| + |K phi| + |div(a xi)|), 0 when all vanish.
double cell_residual(const CoefficientField& a, const SpaceTimeField& phi,
                     std::span<const double> xi, double theta = 1.0);

// Time stepping on a window or torus grid. Level 0 of `data` is the initial
// state; with dirichlet = true, the spatial boundary nodes of every level are
// copied from `data` and only interior nodes are solved for.
SpaceTimeField evolve(const CoefficientSampler& a, const Grid& g, const SpaceTimeField& data,
                      bool dirichlet, const SolverConfig& cfg, SolveStats* stats = nullptr);

// Dirichlet problem on the cylinder C of the torus carrying a. `data` lives
// on C.local_grid(a.grid()) and carries the lateral boundary values on every
// level and the initial values on level 0 (the bottom slice).
SpaceTimeField parabolic_dirichlet(const CoefficientField& a, const Cylinder& C,
                                   const SpaceTimeField& data, const SolverConfig& cfg,
                                   SolveStats* stats = nullptr);
// Constant-coefficient variant on a window grid.
SpaceTimeField parabolic_dirichlet(const Matrix& a, const Grid& local, const SpaceTimeField& data,
                                   const SolverConfig& cfg, SolveStats* stats = nullptr);

// Relative interior residual of the theta-scheme, measured like cell_residual
// but over the non-boundary nodes of levels 1..n_t-1.
double caloric_residual(const CoefficientSampler& a, const SpaceTimeField& u, double theta = 1.0);

// Boundary mask of a window grid: 1 on spatial boundary nodes.
std::vector<std::uint8_t> boundary_mask(const Grid& g);

}  // namespace parahom
