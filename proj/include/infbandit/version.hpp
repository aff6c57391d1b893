#pragma once

namespace infbandit {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace infbandit
