#pragma once

#include <string>
#include <vector>

namespace hybridkernel::csv {

/// Shortest round-trip decimal representation.
std::string format_double(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  std::string to_string() const;
  /// Index of a header column; throws IoError if absent.
  std::size_t column(const std::string& name) const;
};

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

Table parse(const std::string& text);
inline Table read_table(const std::string& path) { return parse(read_file(path)); }
inline void write_table(const std::string& path, const Table& t) { write_file(path, t.to_string()); }

}  // namespace hybridkernel::csv
