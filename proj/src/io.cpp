#include "rtip/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "rtip/errors.hpp"

namespace rtip {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::meta(const std::string& key, const std::string& value) { meta_.push_back("# " + key + ": " + value); }

void CsvWriter::meta(const std::string& key, double value) { meta(key, format_number(value)); }

void CsvWriter::row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("CSV row width does not match header");
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    rows_.push_back(std::move(line));
}

std::string CsvWriter::str() const {
    std::string out;
    for (const auto& m : meta_) out += m + '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) out += ',';
        out += columns_[i];
    }
    out += '\n';
    for (const auto& r : rows_) out += r + '\n';
    return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << content;
        if (!out) throw ConfigError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw ConfigError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

}  // namespace rtip
