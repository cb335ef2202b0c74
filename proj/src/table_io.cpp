#include "fluxline/table_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fluxline::io {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

int Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

std::vector<double> Table::numeric(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw IoError("missing column: " + name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    try {
      out.push_back(std::stod(rows[r][c]));
    } catch (const std::exception&) {
      throw IoError("column " + name + " row " + std::to_string(r + 1) +
                    ": not a number: '" + rows[r][c] + "'");
    }
  }
  return out;
}

namespace {

void write_row(std::ostream& os, const std::vector<std::string>& cells,
               const std::string& path) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\n\r") != std::string::npos)
      throw IoError(path + ": cell contains a separator: '" + cells[i] + "'");
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace

void write_csv(const std::string& path, const Table& table) {
  std::ostringstream os;
  write_row(os, table.header, path);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw IoError(path + ": row width " + std::to_string(row.size()) +
                    " != header width " + std::to_string(table.header.size()));
    write_row(os, row, path);
  }
  write_text_file(path, os.str());
}

Table read_csv(const std::string& path) {
  std::istringstream is(read_text_file(path));
  Table table;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_row(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size())
      throw IoError(path + " line " + std::to_string(lineno) + ": expected " +
                    std::to_string(table.header.size()) + " cells, got " +
                    std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw IoError(path + ": empty file");
  return table;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  if (f.bad()) throw IoError("read failed: " + path);
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << content;
  f.close();
  if (f.fail()) throw IoError("write failed: " + path);
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

}  // namespace fluxline::io
