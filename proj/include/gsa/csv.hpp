#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gsa::csv {

/// Parsed comma-separated table. `line_numbers[i]` is the 1-based source line
/// of `rows[i]` so validation errors can point at the file.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    /// Column index by header name, or header.size() if absent.
    std::size_t column(std::string_view name) const;
};

/// Reads a UTF-8 CSV with a header row. Blank lines are skipped; fields may be
/// double-quoted. Throws IoError when the file cannot be read and
/// IngestionError on ragged rows.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string_view source = "<memory>");

std::string format(const Table& table);
void write(const std::filesystem::path& path, const Table& table);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Parses a real number ('.' decimal separator, scientific notation allowed,
/// "nan"/"inf" accepted so callers can reject them with context).
/// Returns false on malformed text.
bool parse_double(std::string_view text, double& out);

}  // namespace gsa::csv
