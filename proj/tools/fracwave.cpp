// fracwave <command> --config <file> [--strict] [--out <dir>]

#include "fracwave/runner.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Multi-term time-fractional wave equation solver"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool strict = false;

    for (const char* name :
         {"solve", "temporal-study", "spatial-study", "compare-backends", "coeff-check", "soe-check"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_flag("--strict", strict, "abort on coefficient validation failure");
        sub->add_option("--out", out_dir, "directory for CSV and table output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : fracwave::exit_config;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const auto cfg = fracwave::load_config(config_path, fracwave::parse_command(command));
        return fracwave::run_config(cfg, {out_dir, strict}, std::cout);
    } catch (const fracwave::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return fracwave::exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return fracwave::exit_config;
    }
}
