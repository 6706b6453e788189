#pragma once

namespace mcdlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mcdlab
