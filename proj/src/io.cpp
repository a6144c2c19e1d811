#include "mzikd/io.hpp"

#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mzikd::io {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    return std::nullopt;
  }
  return v;
}

std::optional<double> parse_phase(const std::string& s) {
  static const double kPi = std::acos(-1.0);
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  if (auto v = parse_double(t)) return v;
  double sign = 1.0;
  if (t[0] == '-') {
    sign = -1.0;
    t = t.substr(1);
  }
  const auto pos = t.find("pi");
  if (pos == std::string::npos) return std::nullopt;
  const std::string pre = trim(t.substr(0, pos));
  const std::string post = trim(t.substr(pos + 2));
  double mult = 1.0;
  if (!pre.empty()) {
    auto v = parse_double(pre);
    if (!v) return std::nullopt;
    mult = *v;
  }
  double div = 1.0;
  if (!post.empty()) {
    if (post[0] != '/') return std::nullopt;
    auto v = parse_double(post.substr(1));
    if (!v || *v == 0.0) return std::nullopt;
    div = *v;
  }
  return sign * mult * kPi / div;
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::string section;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: expected key=value, got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::runtime_error("config: empty key");
    if (!section.empty()) key = section + "." + key;
    cfg.values_[key] = trim(line.substr(eq + 1));
    cfg.order_.push_back(key);
  }
  return cfg;
}

Config Config::load(const std::string& path) { return parse(read_file(path)); }

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  auto v = parse_phase(it->second);
  if (!v) throw std::runtime_error("config: bad number for " + key);
  return *v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string t = trim(it->second);
  std::uint64_t v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    throw std::runtime_error("config: bad integer for " + key);
  }
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string v = trim(it->second);
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: bad boolean for " + key);
}

std::vector<std::string> Config::section_keys(const std::string& section) const {
  std::vector<std::string> keys;
  const std::string prefix = section + ".";
  for (const auto& k : order_) {
    if (k.rfind(prefix, 0) == 0) keys.push_back(k.substr(prefix.size()));
  }
  return keys;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string digest_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace mzikd::io
