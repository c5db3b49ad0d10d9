#pragma once

namespace hypolab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hypolab
