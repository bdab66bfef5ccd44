#pragma once

#include <string>

namespace dpgn {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

/// Current threshold, read once from the DPGN_LOG_LEVEL environment variable
/// (error|warn|info|debug). Defaults to warn.
LogLevel log_level();

void log(LogLevel level, const std::string& msg);

inline void log_error(const std::string& m) { log(LogLevel::error, m); }
inline void log_warn(const std::string& m) { log(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log(LogLevel::debug, m); }

}  // namespace dpgn
