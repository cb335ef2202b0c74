#pragma once

#include <stdexcept>
#include <string>
#include <vector>

// CSV and text-file helpers shared by the command pipelines. Numeric cells
// are written with %.12g: well below any physical tolerance we quote, and
// stable across runs so equal data means equal bytes.

namespace fluxline::io {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

std::string fmt_g(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  // Column parsed as doubles; throws IoError naming the column on failure.
  std::vector<double> numeric(const std::string& name) const;
};

// Plain comma separation, no quoting; cells must not contain commas or
// newlines (enforced on write, we never export such values).
void write_csv(const std::string& path, const Table& table);
Table read_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);

}  // namespace fluxline::io
