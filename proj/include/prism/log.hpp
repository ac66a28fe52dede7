#pragma once

#include <string>

namespace prism {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Level comes from PRISM_LOG={error,info,debug}; default error.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_error(const std::string& message);
void log_info(const std::string& message);
void log_debug(const std::string& message);

} // namespace prism
