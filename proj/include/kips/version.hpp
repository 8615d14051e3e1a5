#pragma once

namespace kips {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace kips
