#include "d2sac/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace d2sac::csv {

std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) break;
    }
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("csv: cannot open: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        rows.push_back(split_line(line));
    }
    return rows;
}

Writer::Writer(const std::filesystem::path& path) : os_(path, std::ios::trunc), path_(path) {
    if (!os_) throw std::runtime_error("csv: cannot open for writing: " + path.string());
}

void Writer::write_row(const std::vector<std::string>& cells) {
    os_ << join_row(cells) << '\n';
    if (!os_) throw std::runtime_error("csv: write failed: " + path_.string());
}

std::string join_row(const std::vector<std::string>& cells) {
    std::ostringstream os;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    return os.str();
}

}  // namespace d2sac::csv
