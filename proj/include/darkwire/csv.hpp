#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "darkwire/model.hpp"

namespace darkwire {

/// Shortest text that reads back to the same double; "nan"/"inf" otherwise.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

using CsvCell = std::variant<double, long long, std::string>;

/// Writes a header row (column names carry units) then data rows.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> columns) : out_(path), n_(columns.size()) {
    if (!out_) throw Error("cannot write '" + path + "'");
    write(std::vector<CsvCell>(columns.begin(), columns.end()));
  }

  void row(const std::vector<CsvCell>& cells) {
    if (cells.size() != n_) throw Error("csv row has wrong number of cells");
    write(cells);
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }

  void write(const std::vector<CsvCell>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out_ << ',';
      if (const auto* d = std::get_if<double>(&cells[k])) {
        out_ << format_number(*d);
      } else if (const auto* i = std::get_if<long long>(&cells[k])) {
        out_ << *i;
      } else {
        out_ << quote(std::get<std::string>(cells[k]));
      }
    }
    out_ << '\n';
    if (!out_) throw Error("csv write failed");
  }

  std::ofstream out_;
  std::size_t n_;
};

}  // namespace darkwire
