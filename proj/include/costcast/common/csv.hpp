#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace costcast::csv {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Strict parse of a full field as double; throws ParseError.
double parse_double(std::string_view field, std::string_view context);
long long parse_int(std::string_view field, std::string_view context);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws ParseError if absent.
  std::size_t column(std::string_view name) const;
};

/// Reads a comma-delimited file with a header row. Blank lines are skipped.
Table read(const std::string& path);

/// Accumulates rows and writes them with LF endings.
class Writer {
 public:
  explicit Writer(std::vector<std::string> header);
  Writer& row(const std::vector<std::string>& fields);
  std::string str() const;
  void save(const std::string& path) const;

 private:
  std::string buffer_;
  std::size_t width_;
};

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace costcast::csv
