#pragma once

// Plain-text table documents: '#'-prefixed `key=value` metadata lines, one header
// row with unit-suffixed column names, then data rows. Numbers use 9 significant
// digits and '.' as the decimal point.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dyncomp::harness {

struct CsvDocument {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Value of the first metadata entry named `key`, or empty.
    std::string meta(const std::string& key) const;
    /// Column index; throws ConfigError when absent.
    std::size_t column(const std::string& name) const;
};

std::string format_number(double v);
double parse_number(const std::string& text);

void write_csv(const CsvDocument& doc, std::ostream& out);
CsvDocument read_csv(std::istream& in);

/// Writes to `path`; throws Error naming the path on I/O failure.
void write_csv_file(const CsvDocument& doc, const std::string& path);
CsvDocument read_csv_file(const std::string& path);

/// JSON mirror: {"metadata": {...}, "columns": [...], "rows": [[...], ...]}.
std::string to_json(const CsvDocument& doc);

}  // namespace dyncomp::harness
