#pragma once

#include <functional>
#include <string_view>

namespace ramsel {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Replaces the process-wide sink. The default writes warn and above to stderr.
void set_log_sink(LogSink sink);
void set_log_level(LogLevel level);
LogLevel log_level();

void log(LogLevel level, std::string_view message);

inline void log_info(std::string_view m) { log(LogLevel::info, m); }
inline void log_warn(std::string_view m) { log(LogLevel::warn, m); }

}  // namespace ramsel
