#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace gnngp {

/// Structured text report: ordered [section] blocks of key=value lines, then
/// [csv name] blocks with a header row.
class Report {
 public:
  using Entries = std::vector<std::pair<std::string, std::string>>;

  void set(const std::string& section, const std::string& key, const std::string& value);
  void set(const std::string& section, const std::string& key, double value);
  void set(const std::string& section, const std::string& key, long long value);
  void set(const std::string& section, const std::string& key, int value) {
    set(section, key, static_cast<long long>(value));
  }

  /// Starts a CSV block; rows are appended with add_row.
  void add_table(const std::string& name, std::vector<std::string> header);
  void add_row(const std::string& name, std::vector<std::string> row);

  /// Empty string when absent.
  std::string get(const std::string& section, const std::string& key) const;
  const std::vector<std::vector<std::string>>& rows(const std::string& name) const;

  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;

 private:
  struct Section {
    std::string name;
    Entries entries;
  };
  struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
  };
  Section& section(const std::string& name);
  Table& table(const std::string& name);

  std::vector<Section> sections_;
  std::vector<Table> tables_;
};

/// Shortest round-trip decimal form ("nan" and "inf" spelled out).
std::string format_double(double value);

}  // namespace gnngp
