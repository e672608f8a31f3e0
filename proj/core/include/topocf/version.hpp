#pragma once

namespace topocf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace topocf
