/// Locale-independent text formatting, a flat key=value config reader and
/// small file helpers shared by the harness and the CLI.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mzikd::io {

/// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double v);

/// Parse a double; rejects trailing garbage.
std::optional<double> parse_double(const std::string& s);

/// Parse a phase literal: a plain number, "pi", "-pi", "pi/2", "3pi/2".
std::optional<double> parse_phase(const std::string& s);

/// Flat key=value configuration with [section] headers and '#' comments.
/// Keys are stored as "section.key"; keys before any header as "key".
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Keys of one section in file order, without the section prefix.
  std::vector<std::string> section_keys(const std::string& section) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// FNV-1a 64-bit hash of a string, as 16 hex digits.
std::string digest_hex(const std::string& s);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

}  // namespace mzikd::io
