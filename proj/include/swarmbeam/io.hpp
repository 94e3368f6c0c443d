#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmbeam/common.hpp"
#include "swarmbeam/geometry.hpp"

namespace swarmbeam {

/// Shortest round-trip decimal form of a double ("%.17g", '.' separator).
/// All numeric file output goes through here so identical runs produce
/// identical bytes.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Line-oriented CSV writer: UTF-8, LF line endings, no quoting (fields must
/// not contain commas or newlines).
class CsvWriter {
  public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_)
            throw std::runtime_error("cannot open " + path.string() + " for writing");
        path_ = path;
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (!out_) throw std::runtime_error("failed writing " + path_.string());
    }

  private:
    std::ofstream out_;
    std::filesystem::path path_;
};

inline void write_layout_csv(const std::filesystem::path& path, const ArrayLayout& layout) {
    validate(layout);
    CsvWriter csv(path);
    csv.row({"index", "x_wavelengths", "y_wavelengths"});
    for (std::size_t i = 0; i < layout.positions.size(); ++i)
        csv.row({std::to_string(i), fmt_g17(layout.positions[i].x),
                 fmt_g17(layout.positions[i].y)});
    csv.close();
}

/// Read a layout written by write_layout_csv (or authored by hand with the
/// same header).
inline ArrayLayout read_layout_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path.string() + ": empty layout file");
    if (line.ends_with('\r')) line.pop_back();
    if (line != "index,x_wavelengths,y_wavelengths")
        throw std::runtime_error(path.string() +
                                 ": expected header index,x_wavelengths,y_wavelengths");
    ArrayLayout layout;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.ends_with('\r')) line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string idx, xs, ys;
        if (!std::getline(ss, idx, ',') || !std::getline(ss, xs, ',') ||
            !std::getline(ss, ys))
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected 3 comma-separated fields");
        try {
            std::size_t used = 0;
            const double x = std::stod(xs, &used);
            if (used != xs.size()) throw std::invalid_argument(xs);
            const double y = std::stod(ys, &used);
            if (used != ys.size()) throw std::invalid_argument(ys);
            layout.positions.push_back({x, y});
        } catch (const std::exception&) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": malformed number");
        }
    }
    validate(layout);
    return layout;
}

}  // namespace swarmbeam
