#pragma once

#include <stdexcept>
#include <string>

namespace fairglm {

// Error taxonomy mirrored by the CLI exit codes: configuration problems
// (flags, schema semantics, invalid grids) are distinct from data problems
// (unreadable files, bad fields, infeasible inputs).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fairglm
