#pragma once

namespace shapenergy {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace shapenergy
