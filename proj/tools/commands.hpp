#ifndef DCVACONF_TOOLS_COMMANDS_HPP
#define DCVACONF_TOOLS_COMMANDS_HPP

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace dcvaconf::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariant = 1;
inline constexpr int kExitUsage = 2;

/// Raised when a produced artifact contradicts a pipeline invariant.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs `cfg` and writes its artifacts into `out_dir` (created if needed).
/// Prints a metrics table to `log` when cfg.reference is set.
void execute_detect(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dcvaconf::cli

#endif
