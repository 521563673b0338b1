#pragma once

// Tabular output: CSV with full double precision and LF line endings, and a
// JSON form carrying the run configuration alongside the rows.

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinbath::io {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// 17 significant digits: enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_csv(const Table& table, std::ostream& os) {
  for (size_t i = 0; i < table.columns.size(); ++i) {
    if (i) os << ',';
    os << table.columns[i];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << format_double(row[i]);
    }
    os << '\n';
  }
}

inline void emit_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_csv(table, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void emit_json(const Table& table, const nlohmann::ordered_json& meta,
                      const std::string& path) {
  nlohmann::ordered_json doc;
  doc["meta"] = meta;
  doc["meta"]["columns"] = table.columns;
  doc["rows"] = table.rows;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace spinbath::io
