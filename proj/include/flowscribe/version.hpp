#pragma once

namespace flowscribe {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flowscribe
