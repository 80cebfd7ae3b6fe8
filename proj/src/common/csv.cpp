#include "costcast/common/csv.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "costcast/common/errors.hpp"

namespace costcast::csv {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

double parse_double(std::string_view field, std::string_view context) {
  field = trim(field);
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw ParseError(std::string(context) + ": not a number: '" + std::string(field) + "'");
  return v;
}

long long parse_int(std::string_view field, std::string_view context) {
  field = trim(field);
  long long v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw ParseError(std::string(context) + ": not an integer: '" + std::string(field) + "'");
  return v;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParseError("missing CSV column '" + std::string(name) + "'");
}

Table read(const std::string& path) {
  if (!std::filesystem::exists(path)) throw NotFoundError("file not found: " + path);
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open: " + path);
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw ParseError(path + ": empty CSV file");
  return t;
}

Writer::Writer(std::vector<std::string> header) : width_(header.size()) {
  row(header);
}

Writer& Writer::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw std::logic_error("csv::Writer: row width mismatch");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) buffer_.push_back(',');
    buffer_ += fields[i];
  }
  buffer_.push_back('\n');
  return *this;
}

std::string Writer::str() const { return buffer_; }

void Writer::save(const std::string& path) const { write_text(path, buffer_); }

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  if (!std::filesystem::exists(path)) throw NotFoundError("file not found: " + path);
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace costcast::csv
