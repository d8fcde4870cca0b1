#include "ramsel/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace ramsel {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& sink() {
  static LogSink s = [](LogLevel level, std::string_view msg) {
    static constexpr const char* names[] = {"debug", "info", "warn", "error", "off"};
    std::cerr << "[ramsel " << names[static_cast<int>(level)] << "] " << msg << '\n';
  };
  return s;
}

std::atomic<LogLevel>& threshold() {
  static std::atomic<LogLevel> level{LogLevel::warn};
  return level;
}

}  // namespace

void set_log_sink(LogSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void set_log_level(LogLevel level) { threshold().store(level); }

LogLevel log_level() { return threshold().load(); }

void log(LogLevel level, std::string_view message) {
  if (level < threshold().load() || level == LogLevel::off) return;
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(level, message);
}

}  // namespace ramsel
