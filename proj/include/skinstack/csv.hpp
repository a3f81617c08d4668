#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace skinstack::csv {

/// One parsed line of a comma-separated file. `line` is 1-based and counts
/// the header as line 1.
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;
};

/// Reads a plain CSV file (no quoting). Blank lines are skipped, a UTF-8
/// BOM and trailing '\r' are stripped. Throws ValidationError if the file
/// cannot be opened and DataError if it has no header.
Table read(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line, char sep = ',');

/// 17 significant digits, `.` decimal point; round-trips every finite double.
std::string format_double(double value);

/// Strict parse of a decimal floating-point field. Returns false on any
/// trailing garbage. "nan"/"inf" parse successfully; callers check finiteness.
bool parse_double(std::string_view text, double& out);

/// Writes `content` to `path` atomically enough for batch use (truncate + write).
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace skinstack::csv
