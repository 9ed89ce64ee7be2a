#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tempo::csv {

using Row = std::vector<std::string>;

// RFC 4180: comma-separated, double-quote quoting, "" escapes a quote,
// quoted fields may contain commas and newlines. Accepts LF or CRLF.
std::vector<Row> parse(const std::string& content);

std::vector<Row> read_file(const std::filesystem::path& path);

// Quotes a field only when it needs quoting.
std::string encode_field(const std::string& field);

std::string encode_row(const Row& row);

void write_file(const std::filesystem::path& path, const std::vector<Row>& rows);

}  // namespace tempo::csv
