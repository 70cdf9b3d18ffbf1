#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cfish::csv {

// Reads one RFC 4180 record; quoted fields may span lines. Returns nullopt at
// end of input. `line` is advanced by the number of physical lines consumed.
std::optional<std::vector<std::string>> read_record(std::istream& in, std::size_t& line);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip-safe rendering is not needed for plotting data; twelve
// significant digits keeps files readable and stable across runs.
std::string format_number(double value, int precision = 12);

}  // namespace cfish::csv
