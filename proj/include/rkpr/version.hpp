#pragma once

namespace rkpr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rkpr
