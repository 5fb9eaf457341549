#pragma once

namespace orbitbounce {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSchema = "orbit-bounce/1";

}  // namespace orbitbounce
