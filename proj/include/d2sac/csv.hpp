#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace d2sac::csv {

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

std::vector<std::string> split_line(const std::string& line);

// All rows of a CSV file, header included.
std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path);

class Writer {
public:
    explicit Writer(const std::filesystem::path& path);

    void write_row(const std::vector<std::string>& cells);
    bool good() const { return static_cast<bool>(os_); }

private:
    std::ofstream os_;
    std::filesystem::path path_;
};

std::string join_row(const std::vector<std::string>& cells);

}  // namespace d2sac::csv
