#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace coffee::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields, doubled quotes, embedded separators and
// newlines, CRLF line ends and a leading UTF-8 byte order mark.
std::vector<Row> read(std::istream& in, char separator = ',');

void write_row(std::ostream& out, std::span<const std::string> fields, char separator = ',');

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

}  // namespace coffee::csv
