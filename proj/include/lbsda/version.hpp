#pragma once

namespace lbsda {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lbsda
