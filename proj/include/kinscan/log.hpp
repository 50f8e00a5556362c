#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

// Logging goes to stderr only; machine-readable results belong in files.
// Level selected via the KINSCAN_LOG environment variable
// (error | warn | info | debug), default info.

namespace kinscan {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("KINSCAN_LOG");
    if (!env) return LogLevel::kInfo;
    const std::string v(env);
    if (v == "error") return LogLevel::kError;
    if (v == "warn") return LogLevel::kWarn;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

namespace detail {
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

template <typename... Args>
void log(LogLevel level, const Args&... args) {
  if (level > log_level()) return;
  const char* tag = level == LogLevel::kError  ? "error"
                    : level == LogLevel::kWarn ? "warn"
                    : level == LogLevel::kInfo ? "info"
                                               : "debug";
  std::ostringstream oss;
  oss << "[kinscan:" << tag << "] ";
  (oss << ... << args);
  oss << '\n';
  std::lock_guard<std::mutex> lock(detail::log_mutex());
  std::cerr << oss.str();
}

template <typename... Args>
void log_error(const Args&... args) { log(LogLevel::kError, args...); }
template <typename... Args>
void log_warn(const Args&... args) { log(LogLevel::kWarn, args...); }
template <typename... Args>
void log_info(const Args&... args) { log(LogLevel::kInfo, args...); }
template <typename... Args>
void log_debug(const Args&... args) { log(LogLevel::kDebug, args...); }

}  // namespace kinscan
