#pragma once

namespace releaseflow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace releaseflow
