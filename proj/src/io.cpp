#include "spinecho/io.hpp"

#include <cstdio>
#include <sstream>

#include "spinecho/errors.hpp"

namespace spinecho {

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : out_(path, std::ios::binary | std::ios::trunc), n_columns_(columns.size()), path_(path)
{
    if (!out_) {
        throw ConfigError("cannot open " + path.string() + " for writing");
    }
    for (const auto& c : columns) {
        *this << std::string_view(c);
    }
    end_row();
}

void CsvWriter::separator()
{
    if (column_ > 0) {
        out_ << ',';
    }
    ++column_;
}

CsvWriter& CsvWriter::operator<<(double v)
{
    separator();
    out_ << format_double(v);
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long v)
{
    separator();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view v)
{
    separator();
    out_ << v;
    return *this;
}

void CsvWriter::end_row()
{
    if (column_ != n_columns_) {
        throw ConfigError(path_.string() + ": row has " + std::to_string(column_) +
                          " fields, expected " + std::to_string(n_columns_));
    }
    out_ << '\n';
    column_ = 0;
}

std::size_t CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw ConfigError("CSV has no column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) {
            fields.push_back(f);
        }
        return fields;
    };
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError(path.string() + " is empty");
    }
    table.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto fields = split(line);
        if (fields.size() != table.header.size()) {
            throw ConfigError(path.string() + ": malformed row '" + line + "'");
        }
        table.rows.push_back(std::move(fields));
    }
    return table;
}

} // namespace spinecho
