#include "gemsim/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace gemsim {

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size())
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) {
            buffer_ += ',';
        }
        buffer_ += header[i];
    }
    buffer_ += '\n';
}

void CsvWriter::add_row(const std::vector<std::string>& cells)
{
    if (cells.size() != columns_) {
        throw std::logic_error("CSV row width does not match header");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) {
            buffer_ += ',';
        }
        buffer_ += cells[i];
    }
    buffer_ += '\n';
}

std::string CsvWriter::cell(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

std::string CsvWriter::cell(long long value)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", value);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out << content;
        if (!out.flush()) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

} // namespace gemsim
