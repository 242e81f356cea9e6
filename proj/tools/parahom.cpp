// Command-line front end: run experiments from TOML configs and summarize
// their output directories.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "parahom/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"parabolic homogenization lab"};
    app.require_subcommand(1);
    int threads = -1;
    app.add_option("--threads", threads, "worker threads (0 = auto); overrides PARAHOM_THREADS");

    auto* run = app.add_subcommand("run", "execute the experiment of a config file");
    std::string config;
    std::string output;
    run->add_option("config", config, "TOML config")->required();
    run->add_option("-o,--output", output, "output directory (overrides output_dir)");

    auto* check = app.add_subcommand("check", "parse and validate a config, print its canonical form");
    check->add_option("config", config, "TOML config")->required();

    auto* rep = app.add_subcommand("report", "summarize a run directory");
    std::string dir;
    bool gnuplot = false;
    rep->add_option("dir", dir, "output directory of a run")->required();
    rep->add_flag("--gnuplot", gnuplot, "also write whitespace-separated .dat files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : parahom::exit_config;
    }
    if (threads >= 0) setenv("PARAHOM_THREADS", std::to_string(threads).c_str(), 1);

    if (*run) {
        std::optional<std::filesystem::path> out;
        if (!output.empty()) out = output;
        return parahom::run_file(config, out, std::cerr);
    }
    if (*check) {
        try {
            for (const auto& line : parahom::load_config(config).echo()) std::cout << line << '\n';
            return 0;
        } catch (const parahom::ConfigError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return parahom::exit_config;
        }
    }
    try {
        std::cout << parahom::report(dir, gnuplot);
        return 0;
    } catch (const parahom::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return parahom::exit_config;
    }
}
