// Command-line front end: one subcommand per module, exit code 1 for
// configuration errors, 2 for numerical aborts and 3 for I/O failures.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "kinetic/cli_io.hpp"
#include "kinetic/errors.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"Kinetic Cucker-Smale laboratory"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out = ".";
        std::vector<std::string> run_dirs;
    };
    Args args;
    for (const char* name : {"run", "picard", "particles", "monokinetic", "homogeneous"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", args.config, "flat key = value file (empty uses defaults)");
        sub->add_option("--out", args.out, "output directory")->capture_default_str();
    }
    CLI::App* scatter = app.add_subcommand("scatter", "pullback residuals of a finished run");
    scatter->add_option("--run-dir", args.run_dirs, "run directory")->required()->expected(1);
    scatter->add_option("--out", args.out, "output directory (defaults to the run directory)");
    CLI::App* compare = app.add_subcommand("compare", "snapshot L1 distances between two runs");
    compare->add_option("--run-dir", args.run_dirs, "run directory, given twice")->required()->expected(2);
    compare->add_option("--out", args.out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "scatter") {
            const fs::path out = scatter->count("--out") ? fs::path(args.out) : fs::path(args.run_dirs[0]);
            kinetic::scatter_run_dir(args.run_dirs[0], out);
        } else if (name == "compare") {
            kinetic::compare_run_dirs(args.run_dirs[0], args.run_dirs[1], args.out);
        } else {
            const kinetic::Config cfg =
                args.config.empty() ? kinetic::Config{} : kinetic::Config::load(args.config);
            kinetic::orchestrate(name, cfg, args.out);
        }
    } catch (const kinetic::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const kinetic::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const kinetic::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
