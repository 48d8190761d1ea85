#pragma once

// Straight-line recomputation of the text feature vector for pairs drawn
// from a small controlled vocabulary. The surface rules are resolved per
// whitespace token, which is exact for this vocabulary (no token straddles
// a URL, email or phone number).

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace oracle {

using Table = std::map<std::string, std::vector<double>>;

struct Word {
  const char* text;
  const char* token;  // after tokenization, "" when dropped
  int url, image, email, phone, smiley_pos, smiley_neg;
  char run_symbol;  // trailing '!' or '?' run, 0 for none
  int run_length;
};

// clang-format off
inline const std::vector<Word>& vocabulary() {
  static const std::vector<Word> words = {
      {"a", "a", 0, 0, 0, 0, 0, 0, 0, 0},
      {"b", "b", 0, 0, 0, 0, 0, 0, 0, 0},
      {"c", "c", 0, 0, 0, 0, 0, 0, 0, 0},
      {"The", "the", 0, 0, 0, 0, 0, 0, 0, 0},
      {"cat", "cat", 0, 0, 0, 0, 0, 0, 0, 0},
      {"zzz", "zzz", 0, 0, 0, 0, 0, 0, 0, 0},
      {"ok!", "ok", 0, 0, 0, 0, 0, 0, '!', 1},
      {"no!!", "no", 0, 0, 0, 0, 0, 0, '!', 2},
      {"wow!!!!", "wow", 0, 0, 0, 0, 0, 0, '!', 4},
      {"why?", "why", 0, 0, 0, 0, 0, 0, '?', 1},
      {"hmm??", "hmm", 0, 0, 0, 0, 0, 0, '?', 2},
      {":)", "", 0, 0, 0, 0, 1, 0, 0, 0},
      {":(", "", 0, 0, 0, 0, 0, 1, 0, 0},
      {"http://x.y/p.png", "http://x.y/p.png", 1, 1, 0, 0, 0, 0, 0, 0},
      {"http://x.y/q", "http://x.y/q", 1, 0, 0, 0, 0, 0, 0, 0},
      {"me@ex.com", "me@ex.com", 0, 0, 1, 0, 0, 0, 0, 0},
      {"555-123-4567", "555-123-4567", 0, 0, 0, 1, 0, 0, 0, 0},
      {"12345", "12345", 0, 0, 0, 0, 0, 0, 0, 0},
  };
  return words;
}
// clang-format on

inline const Table& toy_table() {
  static const Table t = {{"a", {1, 0, 0}},    {"b", {0, 1, 0}},     {"the", {0.5, 0.5, 1}},
                          {"cat", {-1, 2, 0}}, {"ok", {0, 0, 1}},    {"why", {2, 0, -1}},
                          {"12345", {1, 1, 1}}};
  return t;
}

struct Sentence {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<std::size_t> words;  // indices into vocabulary()
};

inline Sentence random_sentence(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, vocabulary().size() - 1);
  Sentence s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t w = pick(rng);
    s.words.push_back(w);
    if (!s.text.empty()) s.text += ' ';
    s.text += vocabulary()[w].text;
    if (*vocabulary()[w].token) s.tokens.push_back(vocabulary()[w].token);
  }
  return s;
}

inline double ratio(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

inline std::vector<double> surface(const Sentence& s, const Table& table) {
  double urls = 0, images = 0, emails = 0, phones = 0, pos = 0, neg = 0;
  double runs[2][3] = {{0, 0, 0}, {0, 0, 0}};
  double sentences = 0;
  bool open = false;  // content seen since the last sentence end
  for (std::size_t w : s.words) {
    const Word& word = vocabulary()[w];
    urls += word.url;
    images += word.image;
    emails += word.email;
    phones += word.phone;
    pos += word.smiley_pos;
    neg += word.smiley_neg;
    if (word.url || word.email) continue;  // masked out before sentence counting
    if (word.run_symbol) {
      const int which = word.run_symbol == '!' ? 0 : 1;
      runs[which][2] += word.run_length / 3;
      if (word.run_length % 3 == 2) runs[which][1] += 1;
      if (word.run_length % 3 == 1) runs[which][0] += 1;
      sentences += 1;
      open = false;
    } else {
      open = true;
    }
  }
  if (open) sentences += 1;
  if (sentences == 0 && !s.words.empty()) sentences = 1;
  const double tokens = static_cast<double>(s.tokens.size());
  const std::set<std::string> types(s.tokens.begin(), s.tokens.end());
  double oov = 0;
  for (const auto& t : s.tokens) oov += table.count(t) ? 0 : 1;
  return {urls,       images,     emails,     phones,     tokens,     sentences,
          ratio(tokens, sentences), ratio(static_cast<double>(types.size()), tokens),
          pos,        neg,        runs[0][0], runs[0][1], runs[0][2], runs[1][0],
          runs[1][1], runs[1][2], oov};
}

inline double cosine(const std::vector<std::string>& a, const std::vector<std::string>& b,
                     const Table& table) {
  auto mean = [&](const std::vector<std::string>& tokens) {
    std::vector<double> m(3, 0.0);
    double n = 0;
    for (const auto& t : tokens) {
      auto it = table.find(t);
      if (it == table.end()) continue;
      for (int k = 0; k < 3; ++k) m[k] += it->second[k];
      n += 1;
    }
    if (n > 0) {
      for (double& x : m) x /= n;
    }
    return m;
  };
  const auto x = mean(a), y = mean(b);
  double dot = 0, nx = 0, ny = 0;
  for (int k = 0; k < 3; ++k) {
    dot += x[k] * y[k];
    nx += x[k] * x[k];
    ny += y[k] * y[k];
  }
  if (nx == 0 || ny == 0) return 0.0;
  return dot / (std::sqrt(nx) * std::sqrt(ny));
}

// Feature blocks in extraction order, for a same-language pair and a single table.
inline std::vector<std::vector<double>> pair_feature_blocks(const Sentence& q, const Sentence& r,
                                                            int ir_rank, const Table& table) {
  const auto& c = q.tokens;
  const auto& ref = r.tokens;
  std::vector<double> bleu_block(17);
  for (std::size_t n = 1; n <= 4; ++n) {
    const double m = clipped_matches(c, ref, n);
    const double t = static_cast<double>(ngrams(c, n).size());
    bleu_block[n - 1] = ratio(m, t);
    bleu_block[4 + n - 1] = m;
    bleu_block[8 + n - 1] = t;
  }
  const double lc = static_cast<double>(c.size()), lr = static_cast<double>(ref.size());
  bleu_block[12] = lc;
  bleu_block[13] = lr;
  bleu_block[14] = ratio(lc, lr);
  bleu_block[15] = lc == 0 ? 0.0 : std::min(1.0, std::exp(1.0 - lr / lc));
  bleu_block[16] = bleu(c, ref);

  const double m1 = clipped_matches(c, ref, 1);
  const std::vector<double> pr = {ratio(m1, lc), ratio(m1, lr)};
  const std::vector<double> cos = {cosine(c, ref, table)};
  const auto sq = surface(q, table), sr = surface(r, table);
  const std::vector<double> ratios = {ratio(sq[4], sr[4]), ratio(sq[5], sr[5]),
                                      ratio(sq[16], sr[16])};
  const std::vector<double> rr = {1.0 / ir_rank};
  return {bleu_block, pr, cos, sq, sr, ratios, rr};
}

}  // namespace oracle
