#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddc/simnet.hpp"

namespace ddc::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kIo = 2, kInternal = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Used when `run` or `compare` get no --config: five DBSCAN nodes in a
// degree-3 tree, eps twice the median 4-NN distance of each fragment.
RunConfig default_run_config();

// Entry point with argv[0] stripped. Messages go to `out`/`err`; the return
// value is one of ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddc::cli
