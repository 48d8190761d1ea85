#include "clann/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "clann/error.hpp"

namespace clann {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

const KeyValue* KeyValueFile::find(const std::string& key) const {
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (it->key == key) return &*it;
  }
  return nullptr;
}

KeyValueFile parse_key_values(const std::string& text, std::string source) {
  KeyValueFile file{std::move(source), {}};
  std::istringstream in(text);
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(file.source + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
    }
    KeyValue kv{trim(std::string_view(body).substr(0, eq)),
                trim(std::string_view(body).substr(eq + 1)), line_no};
    if (kv.key.empty()) {
      throw ValidationError(file.source + ":" + std::to_string(line_no) + ": empty key");
    }
    file.entries.push_back(std::move(kv));
  }
  return file;
}

KeyValueFile read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str(), path.string());
}

double parse_real(const KeyValueFile& file, const KeyValue& kv) {
  double out = 0.0;
  const char* end = kv.value.data() + kv.value.size();
  auto [ptr, ec] = std::from_chars(kv.value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(file.where(kv) + ": '" + kv.key + "' expects a number, got '" +
                          kv.value + "'");
  }
  return out;
}

long long parse_integer(const KeyValueFile& file, const KeyValue& kv) {
  long long out = 0;
  const char* end = kv.value.data() + kv.value.size();
  auto [ptr, ec] = std::from_chars(kv.value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(file.where(kv) + ": '" + kv.key + "' expects an integer, got '" +
                          kv.value + "'");
  }
  return out;
}

bool parse_bool(const KeyValueFile& file, const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
  if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
  throw ValidationError(file.where(kv) + ": '" + kv.key + "' expects true or false");
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    if (comma == std::string::npos) comma = value.size();
    std::string item = trim(std::string_view(value).substr(start, comma - start));
    if (!item.empty()) items.push_back(std::move(item));
    start = comma + 1;
  }
  return items;
}

}  // namespace clann
