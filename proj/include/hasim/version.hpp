#pragma once

namespace hasim {

inline constexpr const char* version = "0.1.0";

} // namespace hasim
