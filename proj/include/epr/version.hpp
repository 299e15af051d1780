#pragma once

namespace epr {

inline constexpr const char* kToolName = "epr-alloc";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

}  // namespace epr
