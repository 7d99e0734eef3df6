#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace geomort {

// Minimal RFC-4180 CSV support: comma separator, optional double-quote
// quoting with "" escapes, LF or CRLF line endings.

// Splits one physical record (may consume several lines when quoted fields
// contain newlines). Returns false at end of stream.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields);

// Reads every record. When `header` is non-null, the first record goes there.
std::vector<std::vector<std::string>> read_csv(std::istream& in,
                                               std::vector<std::string>* header = nullptr);

std::string csv_quote(const std::string& field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace geomort
