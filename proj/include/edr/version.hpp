#pragma once

namespace edr {

inline constexpr const char* kToolName = "edr";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace edr
