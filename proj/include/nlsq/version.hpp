#pragma once

namespace nlsq {

inline constexpr const char* kVersion = "0.1.0";

} // namespace nlsq
