#pragma once

#include <string>
#include <vector>

namespace bvcf {

/// Shortest text that parses back to the same double ("nan"/"inf" spelled out).
std::string format_double(double v);

/// Comma-joined row.
std::string csv_row(const std::vector<double>& values);

/// Splits one CSV line on commas (no quoting; our files never need it).
std::vector<std::string> split_csv(const std::string& line);

double parse_double(const std::string& text);

}  // namespace bvcf
