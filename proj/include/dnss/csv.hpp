#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dnss/errors.hpp"

namespace dnss {

// Scientific notation with 12 significant digits; the single formatting
// path for all numeric output, so results are byte-reproducible.
std::string format_sci(double v);

// Ordered key=value metadata emitted as "# key=value" header lines.
struct Metadata {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, const char* value);
  void add(const std::string& key, double value);
  void add(const std::string& key, int value);
};

// Comma-separated table: metadata lines, one column-name line, data rows.
struct CsvTable {
  Metadata metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace dnss
