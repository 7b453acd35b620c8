#include "smac/csv.hpp"

#include <charconv>
#include <stdexcept>

namespace smac {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::string& header)
    : path_(path), out_(path) {
    if (!out_) throw std::runtime_error("cannot open csv for writing: " + path);
    out_ << header << '\n';
    columns_ = 1;
    for (char c : header)
        if (c == ',') ++columns_;
}

void CsvWriter::write_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw std::invalid_argument("csv row width mismatch in " + path_);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::write_row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double v : cells) s.push_back(format_double(v));
    write_row(s);
}

}  // namespace smac
