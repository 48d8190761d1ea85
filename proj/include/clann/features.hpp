#pragma once

// Pairwise similarity features for an (original, retrieved) question pair:
// BLEU components, unigram precision/recall, embedding cosines, surface
// counts for each side, count ratios and the IR reciprocal rank.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clann/embeddings.hpp"
#include "clann/linalg.hpp"
#include "clann/question.hpp"

namespace clann {

using Tokens = std::vector<std::string>;

struct NgramStat {
  double clipped_matches = 0.0;
  double candidate_count = 0.0;
  double precision = 0.0;
};

// One entry per order n = 1..max_n.
std::vector<NgramStat> ngram_stats(const Tokens& candidate, const Tokens& reference, int max_n = 4);

double brevity_penalty(std::size_t candidate_length, std::size_t reference_length);

// Smoothed sentence BLEU: add-one on n >= 2 precisions, plain unigram precision.
double sentence_bleu(const Tokens& candidate, const Tokens& reference);

struct LengthFeatures {
  double candidate_length = 0.0;
  double reference_length = 0.0;
  double length_ratio = 0.0;
  double brevity_penalty = 0.0;
};
LengthFeatures length_features(const Tokens& candidate, const Tokens& reference);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};
PrecisionRecall unigram_precision_recall(const Tokens& candidate, const Tokens& reference);

// Zero when either side has zero norm.
double cosine_similarity(const Vector& a, const Vector& b);
double cosine_feature(const Question& q, const Question& q_rel, const EmbeddingTable& table);

struct NamedValue {
  std::string name;
  double value = 0.0;
};
using NamedValues = std::vector<NamedValue>;

// Question-level counts. Detection rules:
//  url     [A-Za-z][A-Za-z0-9+.-]*://\S+ with trailing punctuation trimmed
//  image   a url whose path ends in .jpg .jpeg .png .gif .bmp .webp
//  email   local@domain.tld
//  phone   digit runs joined by single - . ( ) separators, at least 7 digits
//  smileys whitespace-delimited tokens from the lexicons in features.cpp
//  !/? runs are cut greedily into triples, then a double or single remainder
// URLs and emails are masked before the remaining rules run. A token is OOV
// when it appears in none of `tables` (so OOV is 0 with no tables).
NamedValues surface_features(const Question& q, std::span<const EmbeddingTable> tables);

// tokens, sentences, oov of q divided by the same count of q_rel; 0 on a zero denominator.
NamedValues pair_ratio_features(const Question& q, const Question& q_rel,
                                std::span<const EmbeddingTable> tables);

// Throws ValidationError when ir_rank < 1.
double reciprocal_rank_feature(int ir_rank);

enum class FeatureMode { text, precomputed };

struct FeatureSchema {
  std::string version;
  std::vector<std::string> names;

  bool operator==(const FeatureSchema&) const = default;
};

struct PairFeatures {
  Vector values;
  std::vector<std::string> names;
  std::string schema_version;
};

inline constexpr const char* kTextSchemaVersion = "text-v1";
inline constexpr const char* kPrecomputedSchemaVersion = "precomputed-v1";

// Feature names in extraction order:
//   text:        17 BLEU block, unigram P/R, one cosine per table,
//                17 surface counts for q then q_rel, 3 ratios, reciprocal rank
//   precomputed: cosine of the supplied vectors, reciprocal rank
FeatureSchema feature_schema(FeatureMode mode, std::span<const EmbeddingTable> tables);

// MT-style blocks compare q (hypothesis) against q_rel (reference). When the
// two languages differ and q carries a translation, the translation is used.
// The precomputed cosine follows the same rule with q's translated vector.
PairFeatures extract_pair_features(const PairExample& pair, std::span<const EmbeddingTable> tables,
                                   FeatureMode mode);

class FeatureScaler {
 public:
  FeatureScaler() = default;
  FeatureScaler(Vector mean, Vector scale);

  // Population statistics; constant columns get mean 0, scale 1 so they pass through.
  static FeatureScaler fit(std::span<const Vector> rows);

  Vector apply(const Vector& features) const;
  PairFeatures apply(const PairFeatures& features) const;

  const Vector& mean() const { return mean_; }
  const Vector& scale() const { return scale_; }
  std::size_t dim() const { return mean_.dim(); }

 private:
  Vector mean_;
  Vector scale_;
};

// A pair ready for the network: question vectors, scaled features, and bookkeeping.
struct EncodedPair {
  std::string query_id;
  std::string candidate_id;
  int ir_rank = 1;
  Vector original_vector;
  Vector retrieved_vector;
  Vector features;
  std::optional<int> label;
  LanguageBit language = LanguageBit::source;
};

// Question vector fed to the network: the first table's average in text
// mode, the attached vector in precomputed mode.
Vector question_vector(const Question& q, std::span<const EmbeddingTable> tables, FeatureMode mode);

// Raw (unscaled) features; pass a scaler to standardize.
EncodedPair encode_pair(const PairExample& pair, std::span<const EmbeddingTable> tables,
                        FeatureMode mode, const FeatureScaler* scaler = nullptr);

}  // namespace clann
