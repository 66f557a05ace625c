#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace torus_waves {

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Returns 0 on success, 1 on a domain error (reported as a
/// JSON object on `err`) and 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace torus_waves
