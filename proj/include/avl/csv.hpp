#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "avl/errors.hpp"

namespace avl {

// 17 significant digits: parsing the text reproduces the double exactly.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Writes to a new file (existing files only with force) or to a stream.
class CsvWriter {
public:
  CsvWriter(const std::string& path, bool force) : path_(path) {
    namespace fs = std::filesystem;
    if (fs::exists(path) && !force)
      throw ValidationError("output file exists: " + path + " (pass --force to overwrite)");
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    file_.open(path, std::ios::trunc);
    if (!file_) throw ValidationError("cannot open output file: " + path);
    out_ = &file_;
  }

  explicit CsvWriter(std::ostream& os) : out_(&os) {}

  void header(const std::vector<std::string>& cols) { line(cols); }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    line(cells);
  }

  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) *out_ << (i ? "," : "") << cells[i];
    *out_ << '\n';
  }

  const std::string& path() const { return path_; }

private:
  std::string path_;
  std::ofstream file_;
  std::ostream* out_ = nullptr;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read csv file: " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) t.header = std::move(cells);
    else t.rows.push_back(std::move(cells));
    first = false;
  }
  return t;
}

} // namespace avl
