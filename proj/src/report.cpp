#include "gnngp/report.hpp"

#include "gnngp/common.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace gnngp {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

Report::Section& Report::section(const std::string& name) {
  for (auto& s : sections_)
    if (s.name == name) return s;
  sections_.push_back(Section{name, {}});
  return sections_.back();
}

Report::Table& Report::table(const std::string& name) {
  for (auto& t : tables_)
    if (t.name == name) return t;
  throw InputError("report has no table '" + name + "'");
}

void Report::set(const std::string& sec, const std::string& key, const std::string& value) {
  auto& entries = section(sec).entries;
  for (auto& [k, v] : entries)
    if (k == key) {
      v = value;
      return;
    }
  entries.emplace_back(key, value);
}

void Report::set(const std::string& sec, const std::string& key, double value) {
  set(sec, key, format_double(value));
}

void Report::set(const std::string& sec, const std::string& key, long long value) {
  set(sec, key, std::to_string(value));
}

void Report::add_table(const std::string& name, std::vector<std::string> header) {
  for (const auto& t : tables_)
    if (t.name == name) throw InputError("report table '" + name + "' already exists");
  tables_.push_back(Table{name, std::move(header), {}});
}

void Report::add_row(const std::string& name, std::vector<std::string> row) {
  auto& t = table(name);
  if (row.size() != t.header.size())
    throw InputError("report table '" + name + "': row width does not match header");
  t.rows.push_back(std::move(row));
}

std::string Report::get(const std::string& sec, const std::string& key) const {
  for (const auto& s : sections_) {
    if (s.name != sec) continue;
    for (const auto& [k, v] : s.entries)
      if (k == key) return v;
  }
  return {};
}

const std::vector<std::vector<std::string>>& Report::rows(const std::string& name) const {
  for (const auto& t : tables_)
    if (t.name == name) return t.rows;
  throw InputError("report has no table '" + name + "'");
}

void Report::write(std::ostream& out) const {
  bool first = true;
  for (const auto& s : sections_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << '=' << v << '\n';
  }
  for (const auto& t : tables_) {
    if (!first) out << '\n';
    first = false;
    out << "[csv " << t.name << "]\n";
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
  }
}

void Report::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write report " + path.string());
  write(out);
}

}  // namespace gnngp
