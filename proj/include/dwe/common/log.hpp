#pragma once

#include <string_view>

namespace dwe {

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2 };

void set_log_level(LogLevel level) noexcept;
LogLevel log_level() noexcept;

void log_warning(std::string_view message);
void log_info(std::string_view message);

}  // namespace dwe
