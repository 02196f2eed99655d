#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lindblad_forge/error.hpp"

namespace lindblad_forge {

/// 17 significant digits in scientific notation; round-trips every double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    throw Error(ErrorCode::InvalidArgument, "csv: no column '" + name + "'");
  }
};

/// Row-at-a-time writer. Fields are plain tokens (numbers, method names); anything holding
/// a comma or quote is quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> fields) {
    if (fields.size() != header_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "csv row has " + std::to_string(fields.size()) +
                                                     " fields, header has " +
                                                     std::to_string(header_.size()));
    }
    rows_.push_back(std::move(fields));
  }

  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
    f << str();
    if (!f) throw Error(ErrorCode::InvalidArgument, "failed writing '" + path + "'");
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) out += ',';
      const std::string& s = fields[k];
      if (s.find_first_of(",\"\n") != std::string::npos) {
        out += '"';
        for (char c : s) {
          if (c == '"') out += '"';
          out += c;
        }
        out += '"';
      } else {
        out += s;
      }
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      field.clear();
      lines.push_back(std::move(fields));
      fields.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::InvalidArgument, "csv: unterminated quote");
  if (any) {
    fields.push_back(std::move(field));
    lines.push_back(std::move(fields));
  }
  if (lines.empty()) throw Error(ErrorCode::InvalidArgument, "csv: missing header");
  table.header = std::move(lines.front());
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].size() != table.header.size()) {
      throw Error(ErrorCode::InvalidArgument, "csv: row " + std::to_string(k) + " has wrong width");
    }
    table.rows.push_back(std::move(lines[k]));
  }
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

/// Empty fields parse as nullopt; anything else must be a full number (nan/inf included).
inline std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  // subnormals set ERANGE but still parse exactly what was written
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw Error(ErrorCode::InvalidArgument, "csv: '" + s + "' is not a number");
  }
  return v;
}

}  // namespace lindblad_forge
