#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace blowup {

/// Shortest text that parses back to v: 17 significant digits, "nan"/"inf" spelled out.
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Comma-separated rows with a header; the header fixes the column count.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), cols_(header.size()) {
        for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        if (values.size() != cols_) throw std::logic_error("csv row has the wrong number of columns");
        for (std::size_t k = 0; k < values.size(); ++k) out_ << (k ? "," : "") << format_real(values[k]);
        out_ << '\n';
    }

private:
    std::ostream& out_;
    std::size_t cols_;
};

inline std::ofstream open_output(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    return f;
}

}  // namespace blowup
