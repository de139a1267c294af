#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tvo::csv {

// 17 significant digits, '.' decimal separator, locale independent.
std::string format_double(double v);

std::vector<double> parse_doubles(std::string_view line, char sep = ',');

}  // namespace tvo::csv
