#pragma once

#include "magloop/config.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace magloop {

enum ExitCode : int {
    kExitSuccess = 0,
    kExitFailure = 1,  ///< I/O and other unexpected errors
    kExitConfig = 2,
    kExitNonConvergence = 3,
    kExitBlocked = 4,
    kExitCertification = 5,
};

const std::vector<std::string>& command_names();

/// Runs one command, writing artifacts under cfg.output and progress lines to `log`.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log);

/// Two-panel SVG: orthographic view and stereographic view with the rotation index.
std::string orbit_svg(const DiscreteLoop& loop, std::uint64_t seed, int size = 480);

}  // namespace magloop
