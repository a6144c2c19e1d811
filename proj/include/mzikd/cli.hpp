#pragma once

#include <ostream>
#include <string>
#include <vector>

/// Command-line surface.  Subcommands: simulate, ber-map, curves,
/// attack-eval, init-demo, replay.  Global flags: --seed, --config,
/// --out, --format.  The MZIKD_OUT environment variable supplies the
/// default output directory when --out is absent.
///
/// Exit codes: 0 success, 1 usage error, 2 invalid scenario or bad input
/// file, 3 key-agreement failure or replay mismatch.
namespace mzikd::cli {

/// Runs one command.  `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

/// Convenience overload writing to stdout/stderr.
int dispatch(const std::vector<std::string>& args);

}  // namespace mzikd::cli
