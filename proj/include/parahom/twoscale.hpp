#pragma once

#include <string>
#include <utility>
#include <vector>

#include "parahom/corrector.hpp"
#include "parahom/ensemble.hpp"

namespace parahom {

struct TwoScaleConfig {
    double eps = 1.0 / 32;  // mollification radius
    double rho = 0.1;       // cutoff shell width as a fraction of the radius
    double R = 0.25;        // cylinder radius
    // 0 < eps < R/4, 0 < rho < 1/8; throws DomainError.
    void validate() const;
};

// Copy of a window field on a sub-window (both non-periodic, placed by origin).
SpaceTimeField crop(const SpaceTimeField& f, const Grid& sub);

// Spatial convolution with the normalized bump exp(-1/(1 - |x/eps|^2)) over the
// nodes with |x| < eps. Periodic input keeps its grid; window input returns the
// window shrunk by the kernel half-width on every face. Throws DomainError
// when eps < h or the window is too small.
SpaceTimeField mollify(const SpaceTimeField& u, double eps);

// Smoothstep of the parabolic box distance max(|x|_inf, sqrt(-t)) from the axis
// and top of C: 1 on C_{R - 2 rho R}, 0 outside C_{R - rho R}, R = C.radius.
// Throws DomainError when rho R < 4h.
SpaceTimeField cutoff(const Grid& g, const Cylinder& C, double rho);

// Dirichlet problem with constant coefficients ahom on the window of C (given
// in the coordinates of the grid of u_eps), with u_eps as boundary and initial data.
SpaceTimeField ahom_extension(const SpaceTimeField& u_eps, const Matrix& ahom, const Cylinder& C,
                              const SolverConfig& cfg = {});

struct RadiusChoice {
    double r = 0.0;
    int half_width = 0;
    // Scaled boundary constants of the selected radius, in units of the cylinder
    // of radius R: k1 = |u_eps - u| / (eps |grad u|), k2 = eps |u_eps_t| / |grad u|,
    // k3 = (|grad u| + |grad u_eps|)_boundary / |grad u|.
    double k1 = 0.0, k2 = 0.0, k3 = 0.0;
    double time_derivative_ratio = 0.0;  // k2 / eps
    double score = 0.0;
    std::vector<double> candidates;
    std::vector<double> scores;
};

// Exhaustive scan of the grid radii in (R/2, 3R/4) minimizing k1 + k2 + k3 on
// the parabolic boundary. u lives on the window of C_R, u_eps on a sub-window
// with the same axis and top. Throws DomainError when no candidate exists.
RadiusChoice radius_select(const SpaceTimeField& u, const SpaceTimeField& u_eps, double R, double eps);

// w = u - v - eta phi_i D_i v on the grid of v, with forward differences.
SpaceTimeField homogenization_error(const SpaceTimeField& u, const SpaceTimeField& v,
                                    const std::vector<SpaceTimeField>& phi, const SpaceTimeField& eta);

// Corrector normalized on the window of a cylinder: phi minus its cylinder
// mean, psi and sigma minus their slice means, zeta minus its value at the top.
struct NormalizedCorrector {
    std::vector<SpaceTimeField> phi, psi, sigma;
    std::vector<std::vector<double>> zeta;  // per window level, entry i*d + j holds zeta_ij
};
NormalizedCorrector normalize_corrector(const ExtendedCorrector& c, const Grid& window);

using TermTable = std::vector<std::pair<std::string, double>>;

struct TwoScaleResult {
    RadiusChoice radius;
    SpaceTimeField u_eps, v, eta, w;
    CoefficientSampler a;  // sampler under the grid of w
    TermTable terms;
    double left = 0.0;
    double right = 0.0;
    double constant = 0.0;  // left / right
    bool boundary_identity = false;  // w == u - u_eps at every parabolic-boundary node
    double term(const std::string& name) const;
};

// Left side of the energy estimate, integral of grad w . a grad w over the
// cells of the window of w, in units of the cylinder of radius R.
double energy_left(const SpaceTimeField& w, const CoefficientSampler& a, double R);

// Full pipeline on an a-caloric u living on the window of C_R on the torus of a.
TwoScaleResult two_scale(const CoefficientField& a, const ExtendedCorrector& c, const SpaceTimeField& u,
                         const TwoScaleConfig& cfg, const SolverConfig& solver = {});
TermTable energy_report(const CoefficientField& a, const ExtendedCorrector& c, const SpaceTimeField& u,
                        const TwoScaleConfig& cfg, const SolverConfig& solver = {});

struct QualitativeOptions {
    EnsembleSpec micro;   // one cell has unit size and unit duration; `cells` cells per micro torus
    int d = 2;
    int macro_n = 256;
    double h_ratio = 16.0;
    double t_end = 0.02;
    SolverConfig solver{};
};

struct QualitativeRow {
    double eps = 0.0;
    int nodes_per_cell = 0;
    Matrix ahom;
    double l2_error = 0.0;     // space-time L2 norm of u_eps - v
    double l2_relative = 0.0;  // divided by the norm of v
    int steps = 0;
};

// Solves u_t = div(a(x/eps, t/eps^2) grad u) on the unit torus from
// prod sin(2 pi x_k) and compares with the solution for the homogenized
// matrix of the same micro field at the same resolution. Throws DomainError
// for eps < 8h or an eps that does not tile the macro grid.
std::vector<QualitativeRow> qualitative_convergence(const QualitativeOptions& options,
                                                    const std::vector<double>& eps_list);

}  // namespace parahom
