#include "clann/embeddings.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include "clann/error.hpp"
#include "clann/hash.hpp"

namespace clann {

EmbeddingTable::EmbeddingTable(std::string name, std::size_t dimension,
                               std::unordered_map<std::string, Vector> vocabulary)
    : name_(std::move(name)), dimension_(dimension), vocabulary_(std::move(vocabulary)) {
  if (vocabulary_.empty()) throw ValidationError("embedding table '" + name_ + "' is empty");
  for (const auto& [token, vec] : vocabulary_) {
    if (vec.dim() != dimension_) {
      throw ValidationError("embedding table '" + name_ + "': token '" + token + "' has dim " +
                            std::to_string(vec.dim()) + ", expected " +
                            std::to_string(dimension_));
    }
  }
}

const Vector* EmbeddingTable::find(std::string_view token) const {
  auto it = vocabulary_.find(std::string(token));
  return it == vocabulary_.end() ? nullptr : &it->second;
}

TableFingerprint EmbeddingTable::fingerprint() const {
  std::vector<const std::string*> tokens;
  tokens.reserve(vocabulary_.size());
  for (const auto& entry : vocabulary_) tokens.push_back(&entry.first);
  std::sort(tokens.begin(), tokens.end(), [](auto* a, auto* b) { return *a < *b; });

  Fnv1a hash;
  for (const std::string* token : tokens) {
    hash.add(*token);
    hash.add_byte(0);
    for (double x : vocabulary_.at(*token)) hash.add(std::bit_cast<std::uint64_t>(x));
  }
  return {name_, dimension_, hash.value()};
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_count(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable load_embedding_table(const std::filesystem::path& path, std::string name,
                                    std::optional<std::size_t> expected_dimension) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embedding file " + path.string());

  const std::string where = path.string() + ":";
  std::unordered_map<std::string, Vector> vocab;
  std::optional<std::size_t> header_count;
  std::optional<std::size_t> dimension;
  std::size_t token_lines = 0;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line);
    if (fields.empty()) continue;

    if (line_no == 1 && fields.size() == 2) {
      std::size_t count = 0, dim = 0;
      if (parse_count(fields[0], count) && parse_count(fields[1], dim)) {
        header_count = count;
        dimension = dim;
        continue;
      }
    }

    const std::size_t dim = fields.size() - 1;
    if (dim == 0) {
      throw ValidationError(where + std::to_string(line_no) + ": token without vector");
    }
    if (!dimension) dimension = dim;
    if (dim != *dimension) {
      throw ValidationError(where + std::to_string(line_no) + ": expected " +
                            std::to_string(*dimension) + " values, found " + std::to_string(dim));
    }
    Vector vec(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(fields[i + 1], vec[i])) {
        throw ValidationError(where + std::to_string(line_no) + ": unparseable value '" +
                              std::string(fields[i + 1]) + "'");
      }
    }
    vocab.insert_or_assign(std::string(fields[0]), std::move(vec));
    ++token_lines;
  }

  if (header_count && *header_count != token_lines) {
    throw ValidationError(where + " header declares " + std::to_string(*header_count) +
                          " tokens but file has " + std::to_string(token_lines));
  }
  if (!dimension || vocab.empty()) throw ValidationError(where + " no embeddings found");
  if (expected_dimension && *expected_dimension != *dimension) {
    throw ValidationError(where + " dimension " + std::to_string(*dimension) + " but expected " +
                          std::to_string(*expected_dimension));
  }
  return EmbeddingTable(std::move(name), *dimension, std::move(vocab));
}

QuestionEmbedding embed_tokens(const std::vector<std::string>& tokens,
                               const EmbeddingTable& table) {
  if (tokens.empty()) throw ValidationError("cannot embed a question with no tokens");
  QuestionEmbedding out{Vector(table.dimension()), 0, false};
  std::size_t found = 0;
  for (const auto& token : tokens) {
    const Vector* v = table.find(token);
    if (v == nullptr) {
      ++out.oov_tokens;
      continue;
    }
    for (std::size_t i = 0; i < v->dim(); ++i) out.vector[i] += (*v)[i];
    ++found;
  }
  if (found == 0) {
    out.degenerate = true;
    return out;
  }
  const double inv = 1.0 / static_cast<double>(found);
  for (double& x : out.vector) x *= inv;
  return out;
}

QuestionEmbedding embed_question(const Question& q, const EmbeddingTable& table) {
  return embed_tokens(q.tokens, table);
}

namespace {

// Length in bytes of a Unicode whitespace sequence starting at s[i], or 0.
std::size_t whitespace_length(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c == ' ' || (c >= '\t' && c <= '\r')) return 1;
  auto at = [&](std::size_t k) {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u;
  };
  if (c == 0xC2 && (at(1) == 0x85 || at(1) == 0xA0)) return 2;
  if (c == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;
  if (c == 0xE2 && at(1) == 0x80 &&
      ((at(2) >= 0x80 && at(2) <= 0x8A) || at(2) == 0xA8 || at(2) == 0xA9 || at(2) == 0xAF)) {
    return 3;
  }
  if (c == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;
  if (c == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;
  return 0;
}

// Multi-byte punctuation stripped at token edges alongside ASCII punctuation.
constexpr std::array<std::string_view, 12> kUnicodePunct = {
    "؟", "،", "؛", "…", "“", "”",
    "‘", "’", "«", "»", "¿", "¡"};

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::string_view strip_edges(std::string_view token) {
  bool changed = true;
  while (changed && !token.empty()) {
    changed = false;
    if (is_ascii_punct(token.front())) {
      token.remove_prefix(1);
      changed = true;
      continue;
    }
    if (is_ascii_punct(token.back())) {
      token.remove_suffix(1);
      changed = true;
      continue;
    }
    for (auto p : kUnicodePunct) {
      if (token.starts_with(p)) {
        token.remove_prefix(p.size());
        changed = true;
        break;
      }
      if (token.ends_with(p)) {
        token.remove_suffix(p.size());
        changed = true;
        break;
      }
    }
  }
  return token;
}

}  // namespace

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> pieces;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size()) {
      const std::size_t ws = whitespace_length(text, i);
      if (ws == 0) break;
      i += ws;
    }
    const std::size_t start = i;
    while (i < text.size() && whitespace_length(text, i) == 0) ++i;
    if (i > start) pieces.push_back(text.substr(start, i - start));
  }
  return pieces;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (std::string_view piece : split_whitespace(text)) {
    std::string_view raw = strip_edges(piece);
    if (raw.empty()) continue;
    std::string token(raw);
    for (char& c : token) {
      if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(c));
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::pair<std::string, std::filesystem::path> parse_table_spec(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == spec.size()) {
    throw ValidationError("expected --embeddings name=path, got '" + std::string(spec) + "'");
  }
  return {std::string(spec.substr(0, eq)), std::filesystem::path(spec.substr(eq + 1))};
}

}  // namespace clann
