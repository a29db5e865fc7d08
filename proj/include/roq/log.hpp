#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace roq {

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3, Trace = 4 };

/// Log threshold comes from ROQ_LOG (error|warn|info|debug|trace), default warn.
inline LogLevel log_threshold() {
  static LogLevel level = [] {
    const char* env = std::getenv("ROQ_LOG");
    if (!env) return LogLevel::Warn;
    if (!std::strcmp(env, "error")) return LogLevel::Error;
    if (!std::strcmp(env, "warn")) return LogLevel::Warn;
    if (!std::strcmp(env, "info")) return LogLevel::Info;
    if (!std::strcmp(env, "debug")) return LogLevel::Debug;
    if (!std::strcmp(env, "trace")) return LogLevel::Trace;
    return LogLevel::Warn;
  }();
  return level;
}

inline bool log_enabled(LogLevel lv) { return static_cast<int>(lv) <= static_cast<int>(log_threshold()); }

template <typename... Args>
void log(LogLevel lv, const char* fmt, Args... args) {
  if (!log_enabled(lv)) return;
  static const char* names[] = {"error", "warn", "info", "debug", "trace"};
  std::fprintf(stderr, "[roq:%s] ", names[static_cast<int>(lv)]);
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

inline void log(LogLevel lv, const char* msg) { log(lv, "%s", msg); }

}  // namespace roq
