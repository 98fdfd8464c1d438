#pragma once

// Flat key=value text reports and the configuration hash that stamps every
// artifact.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace purephase {

/// FNV-1a 64-bit over the bytes of s.
std::uint64_t fnv1a64(const std::string& s);

/// Hash of a key=value map: FNV-1a over "key=value\n" lines in key order, as 16 hex digits.
std::string config_hash(const std::map<std::string, std::string>& kv);

/// Shortest round-trip decimal form.
std::string format_double(double v);

class Report {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, const char* value) { add(key, std::string{value}); }
  void add(const std::string& key, double value);
  void add(const std::string& key, long long value);
  void add(const std::string& key, int value) { add(key, static_cast<long long>(value)); }
  void add(const std::string& key, std::size_t value) { add(key, static_cast<long long>(value)); }
  void add(const std::string& key, bool value) { add(key, std::string{value ? "true" : "false"}); }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  void write(std::ostream& os) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Parses "key=value" lines; '#' starts a comment, blank lines are skipped.
/// Throws FormatError on a line without '=' or a repeated key.
std::map<std::string, std::string> parse_key_values(std::istream& is);

}  // namespace purephase
