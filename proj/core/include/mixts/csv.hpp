#pragma once

#include <string>

namespace mixts {

// Decimal with 17 significant digits ("%.17g"); round-trips every double.
std::string format_double(double value);

}  // namespace mixts
