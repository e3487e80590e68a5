#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace sml::io {

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// A CSV cell: numbers are written with round-trip precision.
struct Cell {
  std::string text;
  Cell(double x) : text(format_double(x)) {}
  Cell(int x) : text(std::to_string(x)) {}
  Cell(long x) : text(std::to_string(x)) {}
  Cell(long long x) : text(std::to_string(x)) {}
  Cell(unsigned long x) : text(std::to_string(x)) {}
  Cell(unsigned long long x) : text(std::to_string(x)) {}
  Cell(std::string s) : text(std::move(s)) {}
  Cell(const char* s) : text(s) {}
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Plain CSV writer with '\n' line endings and a fixed header.
///
/// Unless `reproducible` is set, the first line is a '#'-prefixed timestamp.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header, bool reproducible)
      : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
    if (!reproducible) out_ << "# generated " << utc_timestamp() << '\n';
    write_row(header);
  }

  void row(std::initializer_list<Cell> cells) {
    std::vector<std::string> text;
    text.reserve(cells.size());
    for (const auto& c : cells) text.push_back(c.text);
    write_row(text);
  }

  void row(const std::vector<Cell>& cells) {
    std::vector<std::string> text;
    text.reserve(cells.size());
    for (const auto& c : cells) text.push_back(c.text);
    write_row(text);
  }

 private:
  void write_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("csv row width mismatch");
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out_ << ',';
      out_ << cells[k];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t columns_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

/// JSON-lines sink, one object per line.
class JsonLines {
 public:
  explicit JsonLines(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
  }
  void write(const nlohmann::json& j) { out_ << j.dump() << '\n'; }

 private:
  std::ofstream out_;
};

}  // namespace sml::io
