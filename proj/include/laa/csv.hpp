#pragma once

#include <cstdio>
#include <istream>
#include <string>
#include <vector>

#include "laa/errors.hpp"

namespace laa::csv {

inline std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

// Reads all rows, skipping blank lines; keeps 1-based line numbers for
// error reporting.
struct Row {
  int line_no = 0;
  std::vector<std::string> fields;
};

inline std::vector<Row> read_rows(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = true;
    for (char ch : line)
      if (ch != ' ' && ch != '\t' && ch != '\r') blank = false;
    if (blank) continue;
    rows.push_back({line_no, split_row(line)});
  }
  return rows;
}

inline double parse_double(const std::string& s, int line_no,
                           const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " +
                     std::string(what) + " value '" + s + "'");
  }
}

inline long parse_int(const std::string& s, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " +
                     std::string(what) + " value '" + s + "'");
  }
}

// Shortest exact decimal form; round-trips to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

}  // namespace laa::csv
