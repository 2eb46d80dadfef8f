#pragma once

namespace recmeta {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace recmeta
