#pragma once

#include <string>
#include <vector>

namespace rtip {

/// Shortest round-trip-safe decimal form used by every CSV and JSON writer
/// (%.12g; "inf", "-inf", "nan" for non-finite values).
std::string format_number(double v);

/// Comma-separated table with '#'-prefixed metadata lines above the header.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns);

    void meta(const std::string& key, const std::string& value);
    void meta(const std::string& key, double value);
    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);

    std::size_t columns() const noexcept { return columns_.size(); }
    std::string str() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::string> meta_;
    std::vector<std::string> rows_;
};

/// Writes content to path via a sibling temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace rtip
