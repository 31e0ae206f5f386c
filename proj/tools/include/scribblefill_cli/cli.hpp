#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scribblefill::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolver = 3;

/// Runs one command line (args excludes the program name). Output that would
/// go to stdout/stderr is written to `out`/`err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scribblefill::cli
