#pragma once

// Human-readable "key = value" files used for run configs, manifests and
// synthetic specs. '#' starts a comment; blank lines are ignored.

#include <filesystem>
#include <string>
#include <vector>

namespace clann {

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct KeyValueFile {
  std::string source;  // path or label used in error messages
  std::vector<KeyValue> entries;

  // Later entries win. Returns nullptr when absent.
  const KeyValue* find(const std::string& key) const;
  std::string where(const KeyValue& kv) const { return source + ":" + std::to_string(kv.line); }
};

KeyValueFile parse_key_values(const std::string& text, std::string source);
KeyValueFile read_key_values(const std::filesystem::path& path);

// Typed accessors; ValidationError names the offending line.
double parse_real(const KeyValueFile& file, const KeyValue& kv);
long long parse_integer(const KeyValueFile& file, const KeyValue& kv);
bool parse_bool(const KeyValueFile& file, const KeyValue& kv);
std::vector<std::string> parse_list(const std::string& value);  // comma separated, trimmed

}  // namespace clann
