#pragma once

#include <optional>
#include <string>

namespace poas {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

std::optional<LogLevel> parse_log_level(const std::string& text);

// Level from POAS_LOG (quiet|info|debug), cached on first use. Unset or
// unrecognized values fall back to info; the CLI validates the variable
// up front and turns a bad value into a usage error instead.
LogLevel log_level();

void log_info(const char* fmt, ...);
void log_debug(const char* fmt, ...);

}  // namespace poas
