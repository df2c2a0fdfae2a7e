#pragma once

namespace kicked {

inline constexpr const char* kCodeVersion = "0.1.0";

// Output schema: readers reject an unknown major version.
inline constexpr const char* kSchemaVersion = "1.0";
inline constexpr int kSchemaMajor = 1;

}  // namespace kicked
