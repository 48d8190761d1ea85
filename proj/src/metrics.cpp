#include "clann/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "clann/error.hpp"

namespace clann {

std::size_t RankedQuery::relevant_count() const {
  return static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [](const auto& c) { return c.relevant; }));
}

RankedQuery rank_query(std::string query_id, std::vector<RankedCandidate> candidates,
                       std::size_t depth) {
  if (depth == 0) throw ValidationError("evaluation depth must be >= 1");
  std::set<std::string> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c.id).second) {
      throw ValidationError("query " + query_id + ": duplicate candidate id " + c.id);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ir_rank < b.ir_rank;
  });
  return {std::move(query_id), std::move(candidates), depth};
}

namespace {

double cutoff_denominator(const RankedQuery& q) {
  return static_cast<double>(std::min(q.relevant_count(), q.depth));
}

std::size_t cutoff(const RankedQuery& q) { return std::min(q.depth, q.candidates.size()); }

}  // namespace

double average_precision(const RankedQuery& q) {
  const double denom = cutoff_denominator(q);
  if (denom == 0.0) return 0.0;
  double hits = 0.0, sum = 0.0;
  for (std::size_t k = 0; k < cutoff(q); ++k) {
    if (!q.candidates[k].relevant) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(k + 1);
  }
  return sum / denom;
}

double reciprocal_rank(const RankedQuery& q) {
  for (std::size_t k = 0; k < cutoff(q); ++k) {
    if (q.candidates[k].relevant) return 1.0 / static_cast<double>(k + 1);
  }
  return 0.0;
}

double average_recall(const RankedQuery& q) {
  const double denom = cutoff_denominator(q);
  if (denom == 0.0) return 0.0;
  double hits = 0.0, sum = 0.0;
  for (std::size_t k = 0; k < q.depth; ++k) {
    if (k < q.candidates.size() && q.candidates[k].relevant) hits += 1.0;
    sum += hits / denom;
  }
  return sum / static_cast<double>(q.depth);
}

EvalResult evaluate(std::span<const RankedQuery> queries) {
  EvalResult r;
  for (const auto& q : queries) {
    if (q.relevant_count() == 0) {
      ++r.skipped_queries;
      continue;
    }
    r.map += average_precision(q);
    r.mrr += reciprocal_rank(q);
    r.avg_rec += average_recall(q);
    ++r.scored_queries;
  }
  if (r.scored_queries == 0) {
    throw ValidationError("evaluate: no query has a relevant candidate");
  }
  const double n = static_cast<double>(r.scored_queries);
  r.map /= n;
  r.mrr /= n;
  r.avg_rec /= n;
  return r;
}

namespace {

std::vector<std::string> split_columns(const std::string& line) {
  std::vector<std::string> cols;
  std::istringstream in(line);
  for (std::string col; in >> col;) cols.push_back(col);
  return cols;
}

std::string location(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

void emit_predictions(std::span<const RankedQuery> queries, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write predictions to " + path.string());
  char score[32];
  for (const auto& q : queries) {
    for (std::size_t k = 0; k < q.candidates.size(); ++k) {
      const auto& c = q.candidates[k];
      std::snprintf(score, sizeof score, "%.17g", c.score);
      out << q.query_id << '\t' << c.id << '\t' << (k + 1) << '\t' << score << '\t'
          << (c.score >= 0.5 ? "true" : "false") << '\n';
    }
  }
  if (!out) throw ValidationError("error while writing " + path.string());
}

std::vector<PredictionLine> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open predictions " + path.string());
  std::vector<PredictionLine> lines;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto cols = split_columns(line);
    if (cols.empty()) continue;
    if (cols.size() != 5) {
      throw ValidationError(location(path, line_no) + ": expected 5 columns, found " +
                            std::to_string(cols.size()));
    }
    PredictionLine p;
    p.query_id = cols[0];
    p.candidate_id = cols[1];
    try {
      p.rank = std::stoi(cols[2]);
      p.score = std::stod(cols[3]);
    } catch (const std::exception&) {
      throw ValidationError(location(path, line_no) + ": bad rank or score");
    }
    if (cols[4] != "true" && cols[4] != "false") {
      throw ValidationError(location(path, line_no) + ": label must be true or false");
    }
    p.predicted_relevant = cols[4] == "true";
    lines.push_back(std::move(p));
  }
  return lines;
}

std::vector<GoldLine> read_gold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open gold file " + path.string());
  std::vector<GoldLine> lines;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto cols = split_columns(line);
    if (cols.empty()) continue;
    if (cols.size() != 3) {
      throw ValidationError(location(path, line_no) + ": expected 3 columns");
    }
    GoldLine g{cols[0], cols[1], false};
    if (cols[2] == "PerfectMatch" || cols[2] == "Relevant") {
      g.relevant = true;
    } else if (cols[2] != "Irrelevant") {
      throw ValidationError(location(path, line_no) + ": unknown label '" + cols[2] + "'");
    }
    lines.push_back(std::move(g));
  }
  return lines;
}

void write_gold(std::span<const RankedQuery> queries, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write gold file " + path.string());
  for (const auto& q : queries) {
    for (const auto& c : q.candidates) {
      out << q.query_id << '\t' << c.id << '\t' << (c.relevant ? "Relevant" : "Irrelevant")
          << '\n';
    }
  }
}

std::vector<RankedQuery> join_predictions(std::span<const PredictionLine> predictions,
                                          std::span<const GoldLine> gold, std::size_t depth) {
  std::map<std::pair<std::string, std::string>, bool> labels;
  for (const auto& g : gold) labels[{g.query_id, g.candidate_id}] = g.relevant;

  std::vector<std::string> order;
  std::map<std::string, std::vector<RankedCandidate>> grouped;
  std::set<std::pair<std::string, std::string>> used;
  for (const auto& p : predictions) {
    auto it = labels.find({p.query_id, p.candidate_id});
    if (it == labels.end()) {
      throw ValidationError("prediction " + p.query_id + "/" + p.candidate_id +
                            " has no gold label");
    }
    if (!grouped.contains(p.query_id)) order.push_back(p.query_id);
    grouped[p.query_id].push_back({p.candidate_id, p.score, it->second, p.rank});
    used.insert(it->first);
  }
  for (const auto& g : gold) {
    if (!used.contains({g.query_id, g.candidate_id})) {
      throw ValidationError("gold entry " + g.query_id + "/" + g.candidate_id +
                            " has no prediction");
    }
  }
  std::vector<RankedQuery> out;
  out.reserve(order.size());
  for (const auto& id : order) out.push_back(rank_query(id, std::move(grouped[id]), depth));
  return out;
}

}  // namespace clann
