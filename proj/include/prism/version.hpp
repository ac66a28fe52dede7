#pragma once

namespace prism {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kPgrdFormatVersion = 1;

} // namespace prism
