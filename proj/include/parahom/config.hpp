#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "parahom/ensemble.hpp"
#include "parahom/solvers.hpp"

namespace parahom {

enum class Experiment { corrector, excess_decay, sublinearity, caccioppoli, two_scale, qualitative, liouville };

Experiment parse_experiment(std::string_view name);
std::string to_string(Experiment e);

struct GridSpec {
    int d = 2;
    int n = 64;
    int n_t = 64;
    double h_ratio = 1.0;  // tau / h^2

    Grid make() const { return Grid::parabolic(d, n, n_t, h_ratio); }
};

struct ExperimentSpec {
    Experiment name = Experiment::corrector;
    std::vector<double> radii;     // decay: largest radius; caccioppoli, two-scale: first radius
    std::vector<double> eps_list;  // two-scale: first entry; qualitative: the sweep
    double rho = 0.1;              // shell width as a fraction of the radius
    int levels = 4;                // dyadic decay levels
    int samples = 10;              // caloric fields per seed (caccioppoli, liouville)
    int macro_n = 256;             // qualitative macro grid
    double t_end = 0.02;           // qualitative horizon
};

struct RunConfig {
    GridSpec grid;
    EnsembleSpec ensemble;
    SolverConfig solver;
    ExperimentSpec experiment;
    std::filesystem::path output_dir = "parahom-out";
    std::vector<std::uint64_t> seeds;  // empty: the ensemble seed

    // Throws ConfigError.
    void validate() const;
    std::vector<std::uint64_t> effective_seeds() const;
    // Canonical "section.key = value" lines, sorted by section.
    std::vector<std::string> echo() const;
};

// TOML subset: tables [grid], [ensemble], [solver], [experiment] and the
// top-level keys output_dir and seeds. Unknown keys are errors.
RunConfig parse_config(std::string_view text, std::string_view source = "config");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace parahom
