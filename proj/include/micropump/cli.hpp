#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace micropump {

/// Exit codes of `run`.
enum ExitCode : int {
    kExitOk = 0,
    kExitInvalid = 1,    // usage, config or input validation error
    kExitNumerical = 2,  // solver failure, or a failed repro criterion
};

/// Entry point behind the `micropump` executable. `args` excludes the
/// program name. Reports go to `out`, diagnostics to `err`; data files and
/// the resolved-config dump go to the `--out` directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace micropump
