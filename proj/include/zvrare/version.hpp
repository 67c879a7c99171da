#pragma once

#include <string>

namespace zvrare {

#ifdef ZVRARE_VERSION
inline constexpr const char* kVersion = ZVRARE_VERSION;
#else
inline constexpr const char* kVersion = "0.0.0";
#endif

/// First line of every CSV: `# zv-rare v<version> schema=<name>`.
inline std::string csv_header_line(const std::string& schema) {
  return std::string("# zv-rare v") + kVersion + " schema=" + schema;
}

}  // namespace zvrare
