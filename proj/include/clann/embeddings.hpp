#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clann/linalg.hpp"
#include "clann/question.hpp"

namespace clann {

// Identifies an embedding table well enough to detect a swapped file at rerank time.
struct TableFingerprint {
  std::string name;
  std::size_t dimension = 0;
  std::uint64_t vocab_hash = 0;

  bool operator==(const TableFingerprint&) const = default;
};

class EmbeddingTable {
 public:
  EmbeddingTable(std::string name, std::size_t dimension,
                 std::unordered_map<std::string, Vector> vocabulary);

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vocabulary_.size(); }

  const Vector* find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) != nullptr; }

  // Hash over tokens and vector values in sorted-token order.
  TableFingerprint fingerprint() const;

 private:
  std::string name_;
  std::size_t dimension_;
  std::unordered_map<std::string, Vector> vocabulary_;
};

// word2vec text format: optional "<vocab> <dim>" header, then "token v1 ... vd" per line.
// Duplicate tokens keep the last vector. Errors carry the 1-based line number.
EmbeddingTable load_embedding_table(const std::filesystem::path& path, std::string name,
                                    std::optional<std::size_t> expected_dimension = {});

struct QuestionEmbedding {
  Vector vector;
  std::size_t oov_tokens = 0;
  // Every token was out of vocabulary; `vector` is all zeros.
  bool degenerate = false;
};

// Mean of the in-vocabulary token vectors. Throws on an empty token list.
QuestionEmbedding embed_tokens(const std::vector<std::string>& tokens, const EmbeddingTable& table);
QuestionEmbedding embed_question(const Question& q, const EmbeddingTable& table);

// Splits on Unicode whitespace without any other normalization.
std::vector<std::string_view> split_whitespace(std::string_view text);

// Lowercases ASCII, splits on Unicode whitespace, strips punctuation at token edges.
std::vector<std::string> tokenize(std::string_view text);

// Splits "name=path" as given to --embeddings.
std::pair<std::string, std::filesystem::path> parse_table_spec(std::string_view spec);

}  // namespace clann
