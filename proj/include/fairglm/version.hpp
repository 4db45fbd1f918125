#pragma once

namespace fairglm {

inline const char* version_string() { return "0.1.0"; }

}  // namespace fairglm
