#pragma once

#include <iosfwd>

#include "fwm/error.hpp"

namespace fwm::app {

/// 2 validation/lookup/configuration, 3 resolution/conditioning,
/// 4 unavailable/linking/degenerate, 5 io.
int exit_code(ErrorKind kind);

/// Command-line entry point. Subcommands: simulate, calibrate, reconstruct,
/// pipeline, oracle-check, demo.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace fwm::app
