#include "purephase/report.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

#include "purephase/errors.hpp"

namespace purephase {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const std::map<std::string, std::string>& kv) {
  std::string text;
  for (const auto& [k, v] : kv) {
    text += k;
    text += '=';
    text += v;
    text += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void Report::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
void Report::add(const std::string& key, double value) { add(key, format_double(value)); }
void Report::add(const std::string& key, long long value) { add(key, std::to_string(value)); }

void Report::write(std::ostream& os) const {
  for (const auto& [k, v] : entries_) {
    os << k << '=' << v << '\n';
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError{"line " + std::to_string(lineno) + ": expected key=value"};
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw FormatError{"line " + std::to_string(lineno) + ": empty key"};
    }
    if (!out.emplace(key, value).second) {
      throw FormatError{"line " + std::to_string(lineno) + ": duplicate key '" + key + "'"};
    }
  }
  return out;
}

}  // namespace purephase
