#pragma once

namespace mnb {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mnb
