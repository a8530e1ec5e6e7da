#pragma once

namespace curvedress {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kVersionString = "curvedress 0.1.0";

}  // namespace curvedress
