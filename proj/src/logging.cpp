#include "rvc/logging.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "rvc/errors.hpp"

namespace rvc::logio {

std::string fmt_g(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

CsvRow& CsvRow::add(const std::string& s) {
  if (!buf_.empty()) buf_ += ',';
  buf_ += s;
  return *this;
}

CsvRow& CsvRow::add(double v, int digits) { return add(fmt_g(v, digits)); }

CsvRow& CsvRow::add(long long v) { return add(std::to_string(v)); }

CsvWriter::CsvWriter(const std::string& path, const std::string& schema,
                     const std::vector<std::string>& columns)
    : path_(path), out_(path) {
  if (!out_) throw IoError("cannot open log file for writing: " + path);
  out_ << "#schema=" << schema << "\n";
  for (size_t i = 0; i < columns.size(); ++i)
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
  out_ << "\n";
}

void CsvWriter::write(const CsvRow& row) { out_ << row.str() << "\n"; }

void CsvWriter::flush() { out_.flush(); }

int CsvTable::col(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

double CsvTable::num(std::size_t row, int c) const {
  if (c < 0 || row >= rows.size() ||
      static_cast<size_t>(c) >= rows[row].size())
    throw IoError("csv: cell out of range");
  return std::strtod(rows[row][static_cast<size_t>(c)].c_str(), nullptr);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv: " + path);
  CsvTable t;
  std::string line;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#schema=", 0) == 0) t.schema = line.substr(8);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header_done) {
      t.columns = std::move(cells);
      header_done = true;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

}  // namespace rvc::logio
