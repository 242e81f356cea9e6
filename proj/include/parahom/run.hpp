#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parahom/config.hpp"

namespace parahom {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_solver = 3;
inline constexpr int exit_gate = 4;

// Executes the configured experiment, writing manifest.txt and the experiment
// CSVs into cfg.output_dir. Errors are mapped to exit codes: ConfigError and
// DomainError 2, SolverError 3, InvariantError or a failed gate 4. The
// manifest is written whenever the output directory is usable. Progress goes
// to `log`.
int run(const RunConfig& cfg, std::ostream& log);
// Parse, optionally redirect the output directory, and run.
int run_file(const std::filesystem::path& config, const std::optional<std::filesystem::path>& output_dir,
             std::ostream& log);

struct Manifest {
    std::vector<std::pair<std::string, std::string>> entries;
    const std::string* find(const std::string& key) const;
};

// Throws ConfigError when the directory has no manifest.
Manifest read_manifest(const std::filesystem::path& dir);

// Human-readable summary of a run directory: status, homogenized matrices,
// identity residual table and experiment figures. With `gnuplot`, every CSV
// is also written as a whitespace-separated .dat file next to it.
std::string report(const std::filesystem::path& dir, bool gnuplot = false);

}  // namespace parahom
