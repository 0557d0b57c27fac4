#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace dyndisc {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// Level comes from DYNDISC_LOG (quiet|info|debug); defaults to info.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("DYNDISC_LOG");
    if (!env) return LogLevel::Info;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::Quiet;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

inline void log_info(const char* fmt, ...) {
  if (log_level() < LogLevel::Info) return;
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  std::fputc('\n', stderr);
  va_end(args);
}

inline void log_debug(const char* fmt, ...) {
  if (log_level() < LogLevel::Debug) return;
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  std::fputc('\n', stderr);
  va_end(args);
}

}  // namespace dyndisc
