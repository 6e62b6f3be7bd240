#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

// Minimal delimited-text helpers. Our formats never quote fields, so a plain
// split is the whole grammar; writers must not emit separators inside fields.

namespace vflow {

std::vector<std::string> split_csv(const std::string& line, char sep = ',');

// Numeric field parsers that reject trailing garbage. `where` feeds the error
// message ("file.csv line 7, column size_satoshi").
std::int64_t parse_int64_field(const std::string& s, const std::string& where);
double parse_double_field(const std::string& s, const std::string& where);

// Shortest round-trip formatting so re-parsing is byte-stable and exact.
std::string format_double(double v);

// Reads a whole text file; errors if it cannot be opened.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Splits into lines, tolerating a missing final newline and CRLF endings.
std::vector<std::string> split_lines(const std::string& text);

}  // namespace vflow
