#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "parahom/solvers.hpp"

namespace parahom {

struct HomogenizedMatrix {
    Matrix ahom;
    double lambda = 1.0;

    // Smallest values over `samples` random unit vectors of
    // xi.ahom xi - lambda and 1/lambda - |ahom xi|.
    EllipticityMargins margins(int samples = 100, std::uint64_t seed = 7) const;
};

// Extended corrector on a space-time torus. Index conventions:
//   phi[i], psi[i]            scalar fields
//   q[i]                      vector field, component j
//   sigma[i]                  matrix-rank field, component j*d + k holds sigma_ijk
//   cond_flux[i], zeta[i]     time series, entry k*d + j
struct ExtendedCorrector {
    Grid grid;
    double lambda = 1.0;
    std::vector<SpaceTimeField> phi;
    std::vector<SpaceTimeField> q;
    std::vector<SpaceTimeField> psi;
    std::vector<SpaceTimeField> sigma;
    std::vector<std::vector<double>> cond_flux;
    std::vector<std::vector<double>> zeta;
    HomogenizedMatrix ahom;
    std::vector<SolveStats> stats;

    bool has_potentials() const { return !psi.empty(); }
    // phi_xi = sum_i xi_i phi_i.
    SpaceTimeField phi_xi(std::span<const double> xi) const;
    // zeta_ij at the end of the period (level n_t), which should be zero.
    double zeta_period_end(int i, int j) const;
};

std::vector<SpaceTimeField> build_phi(const CoefficientField& a, const SolverConfig& cfg,
                                      std::vector<SolveStats>* stats = nullptr);
// q_i = a (grad phi_i + e_i) with the solver's gradient.
std::vector<SpaceTimeField> flux(const CoefficientField& a, const std::vector<SpaceTimeField>& phi);
// Column i is the space-time mean of q_i. Throws InvariantError when the
// result violates lambda |xi|^2 <= xi.ahom xi, |ahom xi| <= |xi| / lambda.
HomogenizedMatrix homogenized(const std::vector<SpaceTimeField>& q, double lambda);
// Spatial mean of q_i on every slice.
std::vector<std::vector<double>> conditional_flux(const std::vector<SpaceTimeField>& q);
// laplacian(psi_i) = div(q_i) per slice, zero mean per slice.
std::vector<SpaceTimeField> build_psi(const std::vector<SpaceTimeField>& q);
// sigma_ijk = laplacian^{-1}(D_k g_j - D_j g_k) with g = q_i - grad psi_i, built
// for j > k and mirrored, so that sigma_ijk = -sigma_ikj exactly.
std::vector<SpaceTimeField> build_sigma(const std::vector<SpaceTimeField>& q,
                                        const std::vector<SpaceTimeField>& psi);
// zeta_i(t_k) = tau * sum_{m=1..k} (c_i(t_m) - ahom e_i), zeta_i(0) = 0, where
// level m carries the flux of the step interval (t_{m-1}, t_m].
std::vector<std::vector<double>> build_zeta(const Grid& g, const std::vector<std::vector<double>>& cond_flux,
                                            const Matrix& ahom);

struct CorrectorOptions {
    bool potentials = true;  // build psi and sigma
};

ExtendedCorrector build_corrector(const CoefficientField& a, const SolverConfig& cfg,
                                  const CorrectorOptions& options = {});

struct IdentityItem {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct IdentityReport {
    std::vector<IdentityItem> items;
    bool all_pass() const;
    const IdentityItem& item(const std::string& name) const;
};

struct VerifyThresholds {
    double corrector_equation = 1e-8;
    double psi_poisson = 1e-10;
    double sigma_divergence = 1e-10;
    double zeta_relation = 1e-8;
    double normalization = 1e-10;
};

// Residuals of every structural identity. Items: corrector_equation,
// psi_poisson, sigma_divergence, sigma_skew, zeta_relation, zeta_start,
// zeta_period, ahom_lower_margin, ahom_upper_margin, phi_mean, psi_mean,
// sigma_mean. Items that need psi/sigma are skipped when they were not built.
IdentityReport verify(const CoefficientField& a, const ExtendedCorrector& c,
                      const VerifyThresholds& thresholds = {}, double theta = 1.0);

// Directory of PSHF files plus manifest.txt (ahom entries and residuals).
void save_corrector(const ExtendedCorrector& c, const IdentityReport& report,
                    const std::filesystem::path& dir);

}  // namespace parahom
