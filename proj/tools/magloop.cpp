// Command-line front end: magloop <command> --config run.yaml [--output dir] [--seed n]

#include "magloop/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
    using namespace magloop;

    CLI::App app{"Closed curves of prescribed geodesic curvature on conformal spheres"};
    app.require_subcommand(1, 1);

    std::string config_path, output;
    std::int64_t seed = -1;
    bool quiet = false;
    const std::map<std::string, std::string> help = {
        {"solve", "Newton solve from a circle or a loop file, then verify"},
        {"continue", "continue a t = 0 seed circle to the target pair"},
        {"verify", "verify an orbit CSV against the configured pair"},
        {"find-two", "search for two distinct certified orbits"},
        {"sweep", "magnetic orbits across energy levels"},
        {"plot", "SVG views of an orbit"},
    };
    for (const auto& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("-c,--config", config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--output", output, "output directory (overrides the config)");
        sub->add_option("-s,--seed", seed, "random seed (overrides the config)")->check(CLI::NonNegativeNumber);
        sub->add_flag("-q,--quiet", quiet, "suppress progress output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    if (!output.empty()) cfg.output = output;
    if (seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.search.solver.seed = cfg.seed;
        cfg.verify.seed = cfg.seed;
    }

    std::ostringstream sink;
    return run_command(command, cfg, quiet ? static_cast<std::ostream&>(sink) : std::cout);
}
