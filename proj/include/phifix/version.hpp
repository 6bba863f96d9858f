#pragma once

namespace phifix {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportFormat = 1;

}  // namespace phifix
