#pragma once

#include <functional>
#include <string_view>

namespace mixts {

using WarningHandler = std::function<void(std::string_view)>;

// Installs a process-wide handler for library warnings and returns the
// previous one. The default handler writes to stderr. Passing an empty
// function silences warnings.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace mixts
