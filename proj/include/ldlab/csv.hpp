#pragma once

// Minimal CSV tables: a header row and rows of numbers or text. Numbers are
// printed with %.12g so reruns produce identical bytes.

#include <cstdio>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "ldlab/error.hpp"

namespace ldlab {

class CsvTable {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<Cell> row) {
        require(row.size() == header_.size(), ErrorCode::InvalidArgument, "CSV row width differs from the header");
        rows_.push_back(std::move(row));
    }

    std::size_t rows() const { return rows_.size(); }

    std::string str() const {
        std::string out = join(header_);
        for (const auto& r : rows_) {
            std::vector<std::string> cells;
            for (const auto& c : r) cells.push_back(format(c));
            out += join(cells);
        }
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        require(static_cast<bool>(f), ErrorCode::Format, "cannot write '" + path + "'");
        f << str();
        require(static_cast<bool>(f), ErrorCode::Format, "write failed for '" + path + "'");
    }

    static std::string format(const Cell& c) {
        if (const auto* d = std::get_if<double>(&c)) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.12g", *d);
            return buf;
        }
        if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
        const std::string& s = std::get<std::string>(c);
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    }

private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        return line + "\n";
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

} // namespace ldlab
