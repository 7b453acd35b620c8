#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace smac {

// Shortest round-trippable decimal representation of a double; the same
// value always formats identically, which is what makes run outputs
// byte-comparable across repeats.
std::string format_double(double v);

// Line-buffered CSV writer with a fixed header.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header);

    void write_row(const std::vector<std::string>& cells);
    // convenience: formats doubles with format_double
    void write_row(const std::vector<double>& cells);

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
};

}  // namespace smac
