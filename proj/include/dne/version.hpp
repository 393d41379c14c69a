#pragma once

namespace dne {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace dne
