#pragma once

// Ranking metrics in the style of the SemEval cQA scorer: MAP, MRR and
// AvgRec at depth K, plus the tab-separated prediction/gold file formats.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace clann {

struct RankedCandidate {
  std::string id;
  double score = 0.0;
  bool relevant = false;
  int ir_rank = 1;  // tie-breaker: equal scores keep IR order
};

// Candidates are kept sorted by score descending, then ir_rank ascending.
struct RankedQuery {
  std::string query_id;
  std::vector<RankedCandidate> candidates;
  std::size_t depth = 10;

  std::size_t relevant_count() const;
};

// Sorts the candidates and checks ids are unique within the query.
RankedQuery rank_query(std::string query_id, std::vector<RankedCandidate> candidates,
                       std::size_t depth = 10);

// (1 / min(R, K)) * sum over relevant positions k <= K of precision@k.
// Assumes at least one relevant candidate.
double average_precision(const RankedQuery& q);
// 1 / position of the first relevant candidate within depth K, else 0.
double reciprocal_rank(const RankedQuery& q);
// Mean over k = 1..K of (#relevant in top k) / min(R, K).
double average_recall(const RankedQuery& q);

struct EvalResult {
  double map = 0.0;
  double mrr = 0.0;
  double avg_rec = 0.0;
  std::size_t scored_queries = 0;
  std::size_t skipped_queries = 0;
};

// Queries without any relevant candidate are skipped for all three metrics.
// Throws ValidationError when nothing is scorable.
EvalResult evaluate(std::span<const RankedQuery> queries);

struct PredictionLine {
  std::string query_id;
  std::string candidate_id;
  int rank = 1;
  double score = 0.0;
  bool predicted_relevant = false;
};

// One line per candidate: query_id, candidate_id, rank, score, true|false.
void emit_predictions(std::span<const RankedQuery> queries, const std::filesystem::path& path);
std::vector<PredictionLine> read_predictions(const std::filesystem::path& path);

struct GoldLine {
  std::string query_id;
  std::string candidate_id;
  bool relevant = false;
};

// query_id, candidate_id, label with label in {PerfectMatch, Relevant, Irrelevant}.
std::vector<GoldLine> read_gold(const std::filesystem::path& path);
void write_gold(std::span<const RankedQuery> queries, const std::filesystem::path& path);

// Pairs predictions with gold labels; the first id present on only one side is an error.
std::vector<RankedQuery> join_predictions(std::span<const PredictionLine> predictions,
                                          std::span<const GoldLine> gold, std::size_t depth = 10);

}  // namespace clann
