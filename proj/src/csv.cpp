#include "dnss/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dnss {

std::string format_sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return buf;
}

void Metadata::add(const std::string& key, const std::string& value) {
  entries.emplace_back(key, value);
}

void Metadata::add(const std::string& key, const char* value) {
  entries.emplace_back(key, std::string(value));
}

void Metadata::add(const std::string& key, double value) {
  entries.emplace_back(key, format_sci(value));
}

void Metadata::add(const std::string& key, int value) {
  entries.emplace_back(key, std::to_string(value));
}

std::string CsvTable::to_string() const {
  std::string out;
  for (const auto& [k, v] : metadata.entries) out += "# " + k + "=" + v + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << content;
  if (!f.good()) throw IoError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("read failed for '" + path + "'");
  return ss.str();
}

}  // namespace dnss
