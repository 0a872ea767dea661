#ifndef GEMSIM_CSV_HPP
#define GEMSIM_CSV_HPP

#include <string>
#include <vector>

namespace gemsim {

// Locale-independent CSV assembly; '.' decimal separator, '\n' newlines.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(const std::vector<std::string>& cells);
    const std::string& text() const { return buffer_; }

    static std::string cell(double value);
    static std::string cell(long long value);

private:
    std::string buffer_;
    std::size_t columns_;
};

// Writes via a temporary file in the same directory and renames into
// place, so a failed run leaves no partial file.
void atomic_write(const std::string& path, const std::string& content);

} // namespace gemsim

#endif
