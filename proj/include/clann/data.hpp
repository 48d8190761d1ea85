#pragma once

// Dataset ingestion (JSON-lines pair records + a key/value manifest), the
// synthetic cross-language generator and split utilities.
//
// Record fields, one JSON object per line:
//   orig_id, orig_lang, orig_text, [orig_translation],
//   rel_id, rel_rank, rel_text, [rel_lang], [label]
// label is one of PerfectMatch, Relevant (both -> 1) or Irrelevant (-> 0).
//
// In precomputed-vector mode a word2vec-format file maps question ids to
// vectors; "<orig_id>#translation" rows supply the translated side.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clann/embeddings.hpp"
#include "clann/features.hpp"
#include "clann/linalg.hpp"
#include "clann/question.hpp"

namespace clann {

struct Dataset {
  std::string source_language = "en";
  std::string target_language = "ar";
  FeatureMode mode = FeatureMode::text;

  std::vector<PairExample> labeled_source;    // D_S
  std::vector<PairExample> unlabeled_target;  // D_T
  std::vector<PairExample> labeled_target;    // D_T*, may be empty
  std::vector<PairExample> dev;
  std::vector<PairExample> test;
  std::vector<PairExample> probe;  // held-out source+target pairs for language probes
  std::map<std::string, std::vector<PairExample>> extra;  // any other named split

  std::size_t source_originals() const;     // N
  std::size_t unlabeled_originals() const;  // M - N
  std::size_t target_originals() const;     // L - M
};

// The retrieved-question side of a group.
struct RetrievedQuestion {
  Question question;
  int ir_rank = 1;
  std::optional<int> label;
};

struct QueryGroup {
  Question original;
  std::vector<RetrievedQuestion> retrieved;
};

// Groups pairs by original id in order of first appearance.
std::vector<QueryGroup> group_by_query(std::span<const PairExample> pairs);
std::vector<PairExample> flatten(std::span<const QueryGroup> groups, LanguageBit language);

struct Manifest {
  std::filesystem::path base_dir;
  std::map<std::string, std::string> entries;

  std::optional<std::filesystem::path> path_of(const std::string& key) const;
};

// key = value lines, '#' comments. Relative paths resolve against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);

// Reads one split file. `labeled` demands a label on every record; otherwise
// labels are kept when present.
std::vector<PairExample> load_split(const std::filesystem::path& path, bool labeled,
                                    const std::string& source_language);

// Manifest keys: source_language, target_language, features (text|precomputed),
// vectors, and split files train, unlabeled, target_train, dev, test, probe.
// Other keys are loaded into Dataset::extra.
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Attaches vectors by question id; throws when one is missing.
void attach_vectors(std::vector<PairExample>& pairs, const EmbeddingTable& vectors);

// Throws ValidationError naming the first (original, retrieved) key found in two pools.
void check_disjoint(const Dataset& dataset);

// Draws an original uniformly, then one of its retrieved questions uniformly
// (or from `related_pool` when it has none). No label; target language bit.
PairExample unlabeled_pairing(Rng& rng, std::span<const QueryGroup> target_originals,
                              std::span<const RetrievedQuestion> related_pool);

// Splits originals (with all their pairs) into two seeded halves. The second
// half is re-expressed in the target language: its originals swap to their
// translated text or translated vector and carry the target language bit.
struct SemisupSplit {
  std::vector<PairExample> source_half;
  std::vector<PairExample> target_half;
};
SemisupSplit split_for_semisup(std::span<const PairExample> labeled_source, double fraction,
                               std::uint64_t seed, const std::string& target_language);

struct SyntheticSpec {
  std::size_t latent_dim = 8;
  std::size_t output_dim = 16;
  // The target map rotates the trailing `rotated_dims` output coordinates
  // pairwise by `rotation_angle`, scales them, and shifts them by `target_offset`.
  std::size_t rotated_dims = 8;
  double rotation_angle = 1.5;
  double target_scale = 1.0;
  double target_offset = 1.0;
  double noise = 0.3;
  // Retrieved latents are affinity * t + N(0, I); 0 gives independent isotropic draws.
  double retrieval_affinity = 0.0;
  double relevance_threshold = 0.2;
  double ir_noise = 0.3;
  // Extra noise on an original's translated rendering, standing in for MT errors.
  double translation_noise = 0.3;
  std::size_t source_train_queries = 200;
  std::size_t dev_queries = 50;
  std::size_t source_test_queries = 50;
  std::size_t target_test_queries = 100;
  std::size_t unlabeled_target_queries = 200;
  std::size_t target_train_queries = 0;  // labeled target pool for semi-supervised runs
  std::size_t probe_queries = 50;  // per language
  std::size_t per_query = 10;
  std::uint64_t seed = 1;
  std::string source_language = "en";
  std::string target_language = "ar";

  void validate() const;
};

// Key/value spec file; unknown keys are errors.
SyntheticSpec read_synthetic_spec(const std::filesystem::path& path);
void write_synthetic_spec(const SyntheticSpec& spec, const std::filesystem::path& path);

// Every question carries a precomputed vector. Test = labeled target test;
// extra["test_source"] = labeled source test.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Writes split files, vectors.txt, gold files and manifest.txt into `dir`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
void write_split(std::span<const PairExample> pairs, const std::filesystem::path& path);

}  // namespace clann
