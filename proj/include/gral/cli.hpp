#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gral::cli {

// Full command-line entry point. Returns the process exit code; pipeline
// errors are printed to `err` as one machine-readable JSON line.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace gral::cli
