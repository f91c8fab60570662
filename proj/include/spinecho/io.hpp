#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace spinecho {

/// Round-trip-safe text for a double: printf %.17g.
std::string format_double(double v);

/// CSV writer: UTF-8, LF line endings, fixed column order.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);

    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(long long v);
    CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(std::string_view v);
    void end_row();

private:
    void separator();

    std::ofstream out_;
    std::size_t n_columns_;
    std::size_t column_ = 0;
    std::filesystem::path path_;
};

/// Reads a CSV with a header row into rows of raw fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

} // namespace spinecho
