#pragma once

namespace mrcner {

inline constexpr const char* kVersion = "v0.1.0";

}  // namespace mrcner
