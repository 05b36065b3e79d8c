#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "risp/errors.hpp"

namespace risp {

/// Minimal CSV writer with deterministic numeric formatting (%.12g), so a
/// rerun with the same inputs is byte-identical.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : os_(path, std::ios::trunc) {
    if (!os_) throw InvalidInputError("CsvWriter: cannot open " + path);
    write_row_strings(header);
  }

  void write_row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ",";
      os_ << cells[i];
    }
    os_ << "\n";
  }

  static std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
  }
  static std::string fmt(std::size_t v) { return std::to_string(v); }
  static std::string fmt(long v) { return std::to_string(v); }
  static std::string fmt(const std::string& s) { return s; }
  static std::string fmt(const char* s) { return s; }

  template <typename... Args>
  void row(const Args&... args) {
    write_row_strings({fmt(args)...});
  }

 private:
  std::ofstream os_;
};

}  // namespace risp
