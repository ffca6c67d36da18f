#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace rvc::logio {

/// Format a double with %.{digits}g (17 digits round-trips exactly).
std::string fmt_g(double v, int digits = 17);

/// Incrementally built CSV row.
class CsvRow {
 public:
  CsvRow& add(const std::string& s);
  CsvRow& add(double v, int digits = 17);
  CsvRow& add(long long v);
  CsvRow& add(long v) { return add(static_cast<long long>(v)); }
  CsvRow& add(int v) { return add(static_cast<long long>(v)); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

/// CSV file with a schema line ("#schema=<name>") and a header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema,
            const std::vector<std::string>& columns);
  void write(const CsvRow& row);
  void flush();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

struct CsvTable {
  std::string schema;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const;  // -1 when absent
  double num(std::size_t row, int col) const;
};

/// Read a CSV written by CsvWriter (or any file with a header row;
/// "#schema=" lines are recognized, other "#" lines skipped).
CsvTable read_csv(const std::string& path);

}  // namespace rvc::logio
