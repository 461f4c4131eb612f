#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace raopt::cli {

/// Runs one `raopt` invocation. `args` excludes the program name. Returns the
/// process exit code: 0 success, 2 infeasible, 3 non-convergence, 4 I/O,
/// 5 validation, 1 anything unexpected. Failures print one JSON object
/// {"error": <category>, "message": ...} on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace raopt::cli
