#pragma once

#include "magloop/solver.hpp"
#include "magloop/verify.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace magloop {

/// Rejected configuration; `violations` lists every problem found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

struct RunConfig {
    FieldPair pair;
    SearchOptions search;  ///< solver, continuation, seed count, threads
    VerifyOptions verify;
    std::filesystem::path output = "out";
    std::uint64_t seed = 20261019;

    struct Solve {
        std::filesystem::path guess;  ///< orbit CSV; empty means a circle
        Vec3d center = Vec3d::UnitZ();
        double radius = 0.0;          ///< 0: arccot(k_inf)
    } solve;
    struct Continue {
        int seed_index = 0;
    } cont;
    struct Check {
        std::filesystem::path orbit;
        double energy = 0.0;  ///< > 0 reads the file as a magnetic orbit
    } check;
    struct Sweep {
        std::vector<double> energies;
        int seed_index = 0;
    } sweep;
    struct Plot {
        std::filesystem::path orbit;
        int size = 480;
    } plot;
};

/// Parses a YAML document. Relative file paths are resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace magloop
