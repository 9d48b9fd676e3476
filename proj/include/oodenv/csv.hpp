#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace oodenv::csv {

using Row = std::vector<std::string>;

/// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
Row split_line(std::string_view line);

/// Reads all rows including the header. Throws DataError if the file cannot
/// be opened.
std::vector<Row> read_file(const std::filesystem::path& path);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string join(const Row& fields);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace oodenv::csv
