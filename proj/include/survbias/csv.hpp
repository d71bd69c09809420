#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace survbias::csv {

// Splits one line of comma-delimited text. Double-quoted fields may contain
// commas and doubled quotes.
std::vector<std::string> split_line(std::string_view line);

// Reads all records; strips a trailing '\r' and a leading UTF-8 BOM.
std::vector<std::vector<std::string>> read_all(std::istream& in);

std::string quote(std::string_view field);

// Six significant digits, "%.6g".
std::string format_number(double v);

}  // namespace survbias::csv
