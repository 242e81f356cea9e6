#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "parahom/corrector.hpp"

namespace parahom {

inline constexpr double excess_floor = 1e-14;
inline constexpr double gram_condition_cap = 1e12;

struct OptimalXi {
    Vector xi;
    double gram_condition = 0.0;
    bool well_posed() const { return gram_condition <= gram_condition_cap; }
};

struct ExcessReport {
    double R = 0.0;
    double value = 0.0;
    Vector xi_star;
    double gram_condition = 0.0;
};

// Energy of grad u against the corrected affine frame e_k + grad phi_k on the
// cells of a cylinder. u lives on the torus of the coefficient field or on a
// window of it; phi and a are sampled under u. Without a corrector the frame
// is the plain basis (phi = 0).
class ExcessEvaluator {
public:
    ExcessEvaluator(const SpaceTimeField& u, const CoefficientSampler& a, const ExtendedCorrector* corrector);
    ExcessEvaluator(const SpaceTimeField& u, const CoefficientField& a, const ExtendedCorrector* corrector);

    const Grid& grid() const { return g_; }
    // Normal equations M xi = b with the symmetric part of a. The condition
    // number is reported; xi is NaN when it exceeds gram_condition_cap.
    OptimalXi optimal_xi(const Cylinder& C) const;
    // avg_C (grad u - xi - grad phi_xi) . a (grad u - xi - grad phi_xi)
    double objective(const Cylinder& C, const Vector& xi) const;
    // Throws InvariantError when the frame is degenerate.
    ExcessReport excess(const Cylinder& C) const;
    // avg_C grad u . a grad u
    double energy(const Cylinder& C) const;

private:
    template <class F>
    void cells(const Cylinder& C, F&& fn) const;

    Grid g_;
    int d_;
    CoefficientSampler a_;
    SpaceTimeField grad_u_;
    std::vector<SpaceTimeField> frame_;  // e_k + grad phi_k; empty without corrector
};

OptimalXi optimal_xi(const SpaceTimeField& u, const ExtendedCorrector& corrector, const CoefficientField& a,
                     const Cylinder& C);
ExcessReport excess(const SpaceTimeField& u, const ExtendedCorrector& corrector, const CoefficientField& a,
                    const Cylinder& C);

struct DecayOptions {
    std::uint64_t seed = 1;
    double R_max = 0.25;
    int levels = 4;
    int degree = 3;       // trigonometric degree of the boundary data
    double margin = 2.0;  // the Dirichlet problem is solved on C_{margin R_max}
    Index center{};       // torus node at the cylinder axis
    int top = -1;         // torus level of the cylinder top; -1 = last level
    SolverConfig solver{};
};

struct DecayReport {
    std::vector<double> radii;  // increasing
    std::vector<ExcessReport> excess;
    double fitted_exponent = 0.0;
    double r_star_estimate = 0.0;
    bool resolved_zero = false;  // some excess below the floor; fit skipped
    bool coarse_bound_ok = true;
    double worst_coarse_ratio = 0.0;  // max Exc(r) / ((R/r)^(d+2) Exc(R)) over pairs
    SolveStats solve{};

    std::vector<double> values() const;
    // Radii at or above r_star_estimate have strictly decreasing excess as r shrinks.
    bool decreasing_above_r_star() const;
};

// Seeded trigonometric polynomial in (x / R, t / R^2) on the window of C.
SpaceTimeField random_boundary_data(const Grid& local, const Cylinder& C, int degree, std::uint64_t seed);

// Least-squares slope of log value against log radius.
double fit_exponent(const std::vector<double>& radii, const std::vector<double>& values);
// Smallest dyadic radius from which Exc(r) / Exc(2r) <= 2^-p (1 + slack) for
// every larger pair; the largest radius when the top pair already fails.
double r_star_estimate(const std::vector<double>& radii, const std::vector<double>& values, double p,
                       double slack = 0.25);

// Excess at R_max, R_max/2, ... of the solution of a Dirichlet problem on
// C_{margin R_max} sharing the axis and the top.
DecayReport decay_experiment(const CoefficientField& a, const ExtendedCorrector& corrector,
                             const DecayOptions& options);
// Same with boundary and initial data fn(x, t), x from the axis, t from the top.
DecayReport decay_experiment(const CoefficientField& a, const ExtendedCorrector& corrector,
                             const DecayOptions& options,
                             const std::function<double(std::span<const double>, double)>& data);
// Decay evaluation of an existing solution on a window grid.
DecayReport decay_from_solution(const ExcessEvaluator& ev, double R_max, int levels);

struct SublinearityRow {
    double R = 0.0;
    double phi_norm = 0.0;    // R^-1 (avg_C |phi - avg_C phi|^2)^(1/2)
    double psi_norm = 0.0;
    double sigma_norm = 0.0;
    double zeta_norm = 0.0;   // R^-2 (avg over (-R^2, 0] |zeta - avg zeta|^2)^(1/2)
    double flux_avg = 0.0;    // |avg_C q|_F
};

struct SublinearityReport {
    std::vector<SublinearityRow> rows;
    double flux_torus = 0.0;  // |ahom|_F
};

// Rows for the given radii on cylinders sharing the axis at `center` and the
// top at level `top` (-1 = last level).
SublinearityReport sublinearity_report(const ExtendedCorrector& c, const std::vector<double>& radii,
                                       const Index& center = {}, int top = -1);

struct CaccioppoliResult {
    double ratio = 0.0;
    double interior_energy = 0.0;
    double shell_l2 = 0.0;  // rho^-2 int_{C_R \ C_{R-rho}} |u - c|^2
    double residual = 0.0;
};

// Interior energy over the weighted shell L2 norm for u on a window grid.
// C_R is centered in the window with the top at its last level. Throws
// InvariantError when the caloric residual of u exceeds `gate`.
CaccioppoliResult caccioppoli_ratio(const SpaceTimeField& u, const CoefficientSampler& a, double R, double rho,
                                    double c, double gate = 1e-6);

struct LiouvilleFit {
    double c = 0.0;
    Vector xi;
    double residual = 0.0;
    std::vector<double> excess;  // per radius
};

// Recovers u = c + xi.x + phi_xi with x measured from the axis of the largest
// cylinder. Cylinders are centered in the grid of u with a common top at the
// last level. Throws InvariantError when some excess exceeds the floor
// relative to max(1, avg_C grad u . a grad u).
LiouvilleFit liouville_recover(const SpaceTimeField& u, const ExtendedCorrector& corrector,
                               const CoefficientField& a, const std::vector<double>& radii);

// Cylinder of radius r centered in a window (or torus) grid with the top at
// `top` (-1 = last level).
Cylinder centered_cylinder(const Grid& g, double r, int top = -1);

}  // namespace parahom
