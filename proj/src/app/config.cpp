#include "parahom/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <sstream>

#include <toml.hpp>

#include "text.hpp"

namespace parahom {

namespace {

constexpr std::array<std::pair<Experiment, std::string_view>, 7> kExperiments{{
    {Experiment::corrector, "corrector"},
    {Experiment::excess_decay, "excess-decay"},
    {Experiment::sublinearity, "sublinearity"},
    {Experiment::caccioppoli, "caccioppoli"},
    {Experiment::two_scale, "two-scale"},
    {Experiment::qualitative, "qualitative"},
    {Experiment::liouville, "liouville"},
}};

std::string where(const toml::node& n, std::string_view key) {
    std::ostringstream os;
    os << key << " (line " << n.source().begin.line << ")";
    return os.str();
}

double get_double(const toml::node& n, std::string_view key) {
    if (auto v = n.value<double>(); v && (n.is_integer() || n.is_floating_point())) return *v;
    throw ConfigError("expected a number for " + where(n, key));
}

std::int64_t get_int(const toml::node& n, std::string_view key) {
    if (auto v = n.as_integer()) return v->get();
    throw ConfigError("expected an integer for " + where(n, key));
}

int get_small_int(const toml::node& n, std::string_view key) {
    const std::int64_t v = get_int(n, key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError("integer out of range for " + where(n, key));
    return static_cast<int>(v);
}

std::uint64_t get_seed(const toml::node& n, std::string_view key) {
    const std::int64_t v = get_int(n, key);
    if (v < 0) throw ConfigError("seeds must be non-negative: " + where(n, key));
    return static_cast<std::uint64_t>(v);
}

std::string get_string(const toml::node& n, std::string_view key) {
    if (auto v = n.as_string()) return v->get();
    throw ConfigError("expected a string for " + where(n, key));
}

template <class F>
auto get_list(const toml::node& n, std::string_view key, F&& item) {
    const auto* arr = n.as_array();
    if (!arr) throw ConfigError("expected an array for " + where(n, key));
    std::vector<decltype(item(n, key))> out;
    for (const auto& e : *arr) out.push_back(item(e, key));
    return out;
}

const toml::table& get_table(const toml::node& n, std::string_view key) {
    if (const auto* t = n.as_table()) return *t;
    throw ConfigError("expected a table for " + where(n, key));
}

void parse_grid(const toml::table& t, GridSpec& g) {
    for (const auto& [k, v] : t) {
        const std::string_view key = k.str();
        if (key == "d") g.d = get_small_int(v, key);
        else if (key == "n") g.n = get_small_int(v, key);
        else if (key == "n_t") g.n_t = get_small_int(v, key);
        else if (key == "h_ratio") g.h_ratio = get_double(v, key);
        else throw ConfigError("unknown key grid." + std::string(key));
    }
}

void parse_ensemble(const toml::table& t, EnsembleSpec& e) {
    for (const auto& [k, v] : t) {
        const std::string_view key = k.str();
        if (key == "kind") {
            try {
                e.kind = parse_ensemble_kind(get_string(v, key));
            } catch (const DomainError& err) {
                throw ConfigError(err.what());
            }
        } else if (key == "lambda") e.lambda = get_double(v, key);
        else if (key == "cells") e.cells = get_small_int(v, key);
        else if (key == "cells_t") e.cells_t = get_small_int(v, key);
        else if (key == "seed") e.seed = get_seed(v, key);
        else if (key == "values") e.values = get_list(v, key, get_double);
        else if (key == "matrix") e.matrix = get_list(v, key, get_double);
        else throw ConfigError("unknown key ensemble." + std::string(key));
    }
}

void parse_solver(const toml::table& t, SolverConfig& s) {
    for (const auto& [k, v] : t) {
        const std::string_view key = k.str();
        if (key == "tol") s.tol = get_double(v, key);
        else if (key == "max_iter") s.max_iter = get_small_int(v, key);
        else if (key == "period_tol") s.period_tol = get_double(v, key);
        else if (key == "anderson_depth") s.anderson_depth = get_small_int(v, key);
        else if (key == "theta") s.theta = get_double(v, key);
        else throw ConfigError("unknown key solver." + std::string(key));
    }
}

void parse_experiment_table(const toml::table& t, ExperimentSpec& x) {
    for (const auto& [k, v] : t) {
        const std::string_view key = k.str();
        if (key == "name") x.name = parse_experiment(get_string(v, key));
        else if (key == "radii") x.radii = get_list(v, key, get_double);
        else if (key == "eps_list") x.eps_list = get_list(v, key, get_double);
        else if (key == "rho") x.rho = get_double(v, key);
        else if (key == "levels") x.levels = get_small_int(v, key);
        else if (key == "samples") x.samples = get_small_int(v, key);
        else if (key == "macro_n") x.macro_n = get_small_int(v, key);
        else if (key == "t_end") x.t_end = get_double(v, key);
        else throw ConfigError("unknown key experiment." + std::string(key));
    }
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + text::num(v[i]);
    return s + "]";
}

}  // namespace

Experiment parse_experiment(std::string_view name) {
    for (const auto& [e, s] : kExperiments)
        if (s == name) return e;
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string to_string(Experiment e) {
    for (const auto& [x, s] : kExperiments)
        if (x == e) return std::string(s);
    return "unknown";
}

std::vector<std::uint64_t> RunConfig::effective_seeds() const {
    return seeds.empty() ? std::vector<std::uint64_t>{ensemble.seed} : seeds;
}

void RunConfig::validate() const {
    try {
        solver.validate();
        if (experiment.name != Experiment::qualitative) {
            if (grid.d < 1 || grid.d > 3) throw ConfigError("grid.d must be 1, 2 or 3");
            if (grid.n < 2 || grid.n_t < 1 || !(grid.h_ratio > 0.0)) throw ConfigError("invalid grid sizes");
            ensemble.validate(grid.make());
        } else if (!(ensemble.lambda > 0.0 && ensemble.lambda <= 1.0)) {
            throw ConfigError("ensemble.lambda must lie in (0, 1]");
        }
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    const auto& x = experiment;
    auto positive = [](const std::vector<double>& v) {
        return !v.empty() && std::all_of(v.begin(), v.end(), [](double r) { return r > 0.0; });
    };
    switch (x.name) {
    case Experiment::corrector:
        break;
    case Experiment::excess_decay:
        if (!positive(x.radii) || x.levels < 2) throw ConfigError("excess-decay needs radii and levels >= 2");
        break;
    case Experiment::sublinearity:
    case Experiment::liouville:
        if (!positive(x.radii)) throw ConfigError("experiment.radii must be a non-empty list of positive radii");
        if (x.name == Experiment::liouville && x.samples < 1) throw ConfigError("experiment.samples must be positive");
        break;
    case Experiment::caccioppoli:
        if (!positive(x.radii) || !(x.rho > 0.0 && x.rho <= 0.5) || x.samples < 1)
            throw ConfigError("caccioppoli needs radii, rho in (0, 1/2] and samples >= 1");
        break;
    case Experiment::two_scale:
        if (!positive(x.radii) || !positive(x.eps_list)) throw ConfigError("two-scale needs radii and eps_list");
        if (!(x.rho > 0.0 && x.rho < 0.125)) throw ConfigError("two-scale rho must lie in (0, 1/8)");
        break;
    case Experiment::qualitative:
        if (!positive(x.eps_list) || x.macro_n < 8 || !(x.t_end > 0.0))
            throw ConfigError("qualitative needs eps_list, macro_n >= 8 and t_end > 0");
        break;
    }
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::vector<std::string> RunConfig::echo() const {
    std::vector<std::string> out;
    auto kv = [&](const std::string& k, const std::string& v) { out.push_back(k + " = " + v); };
    kv("grid.d", std::to_string(grid.d));
    kv("grid.n", std::to_string(grid.n));
    kv("grid.n_t", std::to_string(grid.n_t));
    kv("grid.h_ratio", text::num(grid.h_ratio));
    kv("ensemble.kind", to_string(ensemble.kind));
    kv("ensemble.lambda", text::num(ensemble.lambda));
    kv("ensemble.cells", std::to_string(ensemble.cells));
    kv("ensemble.cells_t", std::to_string(ensemble.cells_t));
    kv("ensemble.seed", std::to_string(ensemble.seed));
    kv("ensemble.values", list(ensemble.values));
    kv("ensemble.matrix", list(ensemble.matrix));
    kv("solver.tol", text::num(solver.tol));
    kv("solver.max_iter", std::to_string(solver.max_iter));
    kv("solver.period_tol", text::num(solver.period_tol));
    kv("solver.anderson_depth", std::to_string(solver.anderson_depth));
    kv("solver.theta", text::num(solver.theta));
    kv("experiment.name", to_string(experiment.name));
    kv("experiment.radii", list(experiment.radii));
    kv("experiment.eps_list", list(experiment.eps_list));
    kv("experiment.rho", text::num(experiment.rho));
    kv("experiment.levels", std::to_string(experiment.levels));
    kv("experiment.samples", std::to_string(experiment.samples));
    kv("experiment.macro_n", std::to_string(experiment.macro_n));
    kv("experiment.t_end", text::num(experiment.t_end));
    kv("output_dir", output_dir.string());
    std::string s = "[";
    const auto seeds_used = effective_seeds();
    for (std::size_t i = 0; i < seeds_used.size(); ++i) s += (i ? ", " : "") + std::to_string(seeds_used[i]);
    kv("seeds", s + "]");
    return out;
}

RunConfig parse_config(std::string_view text, std::string_view source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ": " << e.description();
        throw ConfigError(os.str());
    }
    RunConfig cfg;
    for (const auto& [k, v] : root) {
        const std::string_view key = k.str();
        if (key == "grid") parse_grid(get_table(v, key), cfg.grid);
        else if (key == "ensemble") parse_ensemble(get_table(v, key), cfg.ensemble);
        else if (key == "solver") parse_solver(get_table(v, key), cfg.solver);
        else if (key == "experiment") parse_experiment_table(get_table(v, key), cfg.experiment);
        else if (key == "output_dir") cfg.output_dir = get_string(v, key);
        else if (key == "seeds") cfg.seeds = get_list(v, key, get_seed);
        else throw ConfigError("unknown key " + std::string(key));
    }
    if (!root.contains("experiment")) throw ConfigError("missing [experiment] table");
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

}  // namespace parahom
