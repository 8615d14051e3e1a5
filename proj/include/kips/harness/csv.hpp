#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kips::harness {

// Round-trip formatting so re-running a seeded experiment produces
// byte-identical files.
inline std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(std::move(header)) {
    if (columns_.empty()) throw std::invalid_argument("CsvWriter: empty header");
  }

  void add_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
      throw std::invalid_argument("CsvWriter: row width mismatch");
    rows_.push_back(cells);
  }

  std::string to_string() const {
    std::ostringstream out;
    write_line(out, columns_);
    for (const auto& row : rows_) write_line(out, row);
    return out.str();
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("CsvWriter: cannot write " + path);
    out << to_string();
    if (!out) throw std::runtime_error("CsvWriter: write failed for " + path);
  }

  std::size_t row_count() const { return rows_.size(); }

 private:
  static void write_line(std::ostringstream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw std::runtime_error("csv: missing column '" + name + "'");
  }

  double number(std::size_t row, std::size_t col) const {
    return std::stod(rows.at(row).at(col));
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  CsvTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (header) {
      table.columns = cells;
      header = false;
    } else {
      if (cells.size() != table.columns.size())
        throw std::runtime_error("csv: ragged row in " + path);
      table.rows.push_back(cells);
    }
  }
  if (table.columns.empty()) throw std::runtime_error("csv: empty file " + path);
  return table;
}

}  // namespace kips::harness
