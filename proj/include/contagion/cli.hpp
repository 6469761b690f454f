#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace contagion::cli {

// Entry point of the `contagion` tool. Returns the process exit status:
// 0 when every requested artifact was written and every run converged,
// 1 on a usage, validation or I/O error, 2 when some run hit the iteration
// cap.
int main(int argc, const char* const* argv);

// Same, with captured streams (used by tests).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace contagion::cli
