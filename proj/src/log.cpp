#include "poas/log.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>

namespace poas {

std::optional<LogLevel> parse_log_level(const std::string& text) {
  if (text == "quiet") return LogLevel::quiet;
  if (text == "info") return LogLevel::info;
  if (text == "debug") return LogLevel::debug;
  return std::nullopt;
}

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("POAS_LOG");
    if (env == nullptr) return LogLevel::info;
    return parse_log_level(env).value_or(LogLevel::info);
  }();
  return level;
}

static void vlog(const char* fmt, va_list args) {
  std::fputs("poas: ", stderr);
  std::vfprintf(stderr, fmt, args);
  std::fputc('\n', stderr);
}

void log_info(const char* fmt, ...) {
  if (log_level() < LogLevel::info) return;
  va_list args;
  va_start(args, fmt);
  vlog(fmt, args);
  va_end(args);
}

void log_debug(const char* fmt, ...) {
  if (log_level() < LogLevel::debug) return;
  va_list args;
  va_start(args, fmt);
  vlog(fmt, args);
  va_end(args);
}

}  // namespace poas
