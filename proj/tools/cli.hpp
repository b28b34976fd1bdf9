#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ocgs {

/// Exit codes: 0 success, 1 usage, 2 data/format, 3 numerical abort. Errors are reported
/// as one JSON line on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace ocgs
