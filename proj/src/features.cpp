#include "clann/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <regex>
#include <set>
#include <unordered_map>

#include "clann/error.hpp"

namespace clann {

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

std::vector<NgramStat> ngram_stats(const Tokens& candidate, const Tokens& reference, int max_n) {
  if (max_n < 1) throw ValidationError("ngram_stats: max_n must be >= 1");
  std::vector<NgramStat> stats;
  stats.reserve(static_cast<std::size_t>(max_n));
  for (int n = 1; n <= max_n; ++n) {
    const auto order = static_cast<std::size_t>(n);
    const NgramCounts cand = count_ngrams(candidate, order);
    const NgramCounts ref = count_ngrams(reference, order);
    NgramStat s;
    s.candidate_count =
        candidate.size() >= order ? static_cast<double>(candidate.size() - order + 1) : 0.0;
    for (const auto& [gram, count] : cand) {
      auto it = ref.find(gram);
      if (it != ref.end()) s.clipped_matches += std::min(count, it->second);
    }
    s.precision = safe_ratio(s.clipped_matches, s.candidate_count);
    stats.push_back(s);
  }
  return stats;
}

double brevity_penalty(std::size_t candidate_length, std::size_t reference_length) {
  if (candidate_length == 0) return 0.0;
  const double ratio =
      static_cast<double>(reference_length) / static_cast<double>(candidate_length);
  return std::min(1.0, std::exp(1.0 - ratio));
}

double sentence_bleu(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty()) return 0.0;
  const auto stats = ngram_stats(candidate, reference, 4);
  double log_sum = 0.0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const double smoothing = i == 0 ? 0.0 : 1.0;
    const double num = stats[i].clipped_matches + smoothing;
    const double den = stats[i].candidate_count + smoothing;
    if (num == 0.0) return 0.0;
    log_sum += 0.25 * std::log(num / den);
  }
  return brevity_penalty(candidate.size(), reference.size()) * std::exp(log_sum);
}

LengthFeatures length_features(const Tokens& candidate, const Tokens& reference) {
  LengthFeatures f;
  f.candidate_length = static_cast<double>(candidate.size());
  f.reference_length = static_cast<double>(reference.size());
  f.length_ratio = safe_ratio(f.candidate_length, f.reference_length);
  f.brevity_penalty = brevity_penalty(candidate.size(), reference.size());
  return f;
}

PrecisionRecall unigram_precision_recall(const Tokens& candidate, const Tokens& reference) {
  const double matches = ngram_stats(candidate, reference, 1)[0].clipped_matches;
  return {safe_ratio(matches, static_cast<double>(candidate.size())),
          safe_ratio(matches, static_cast<double>(reference.size()))};
}

double cosine_similarity(const Vector& a, const Vector& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

namespace {

Vector embed_or_zero(const Question& q, const EmbeddingTable& table) {
  if (q.tokens.empty()) return Vector(table.dimension());
  return embed_question(q, table).vector;
}

}  // namespace

double cosine_feature(const Question& q, const Question& q_rel, const EmbeddingTable& table) {
  return cosine_similarity(embed_or_zero(q, table), embed_or_zero(q_rel, table));
}

namespace {

const std::regex& url_regex() {
  static const std::regex re(R"([A-Za-z][A-Za-z0-9+.\-]*://[^\s]+)");
  return re;
}

const std::regex& email_regex() {
  static const std::regex re(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(\.[A-Za-z0-9\-]+)+)");
  return re;
}

const std::regex& phone_regex() {
  static const std::regex re(R"(\d(?:[\-.()]?\d)*)");
  return re;
}

constexpr std::array<std::string_view, 16> kPositiveSmileys = {
    ":)", ":-)", ":]", "=)", ":D", ":-D", ":d", ";)", ";-)", ":P", ":-P", ":p", "<3", "^_^", "^^", "(:"};
constexpr std::array<std::string_view, 10> kNegativeSmileys = {
    ":(", ":-(", ":'(", ":[", "=(", ":/", ":-/", ">:(", ":|", "):"};

constexpr std::array<std::string_view, 6> kImageSuffixes = {".jpg", ".jpeg", ".png",
                                                            ".gif", ".bmp",  ".webp"};

std::string trim_trailing_punct(std::string s) {
  while (!s.empty() && std::string_view(".,;:!?)]}'\"").find(s.back()) != std::string_view::npos) {
    s.pop_back();
  }
  return s;
}

bool is_image_url(std::string url) {
  const auto cut = url.find_first_of("?#");
  if (cut != std::string::npos) url.resize(cut);
  for (char& c : url) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return std::any_of(kImageSuffixes.begin(), kImageSuffixes.end(),
                     [&](std::string_view s) { return url.ends_with(s); });
}

// Replaces every match with a space and returns the (trimmed) matched strings.
std::vector<std::string> mask_matches(std::string& text, const std::regex& re, bool trim) {
  std::vector<std::string> found;
  std::string out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), re);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    std::string match = it->str();
    std::size_t len = match.size();
    if (trim) {
      match = trim_trailing_punct(match);
      len = match.size();
    }
    const auto pos = static_cast<std::size_t>(it->position());
    if (pos < last) continue;
    out.append(text, last, pos - last);
    out += ' ';
    last = pos + len;
    found.push_back(std::move(match));
  }
  out.append(text, last, std::string::npos);
  text = std::move(out);
  return found;
}

struct RunCounts {
  double single = 0, twice = 0, triple = 0;
};

RunCounts count_runs(std::string_view text, char symbol) {
  RunCounts c;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != symbol) {
      ++i;
      continue;
    }
    std::size_t run = 0;
    while (i < text.size() && text[i] == symbol) {
      ++run;
      ++i;
    }
    c.triple += static_cast<double>(run / 3);
    if (run % 3 == 2) c.twice += 1;
    if (run % 3 == 1) c.single += 1;
  }
  return c;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

double count_sentences(std::string_view text) {
  double sentences = 0;
  bool has_content = false;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_terminator(text[i])) {
      std::size_t j = i;
      while (j < text.size() && is_terminator(text[j])) ++j;
      const bool boundary = j == text.size() || std::isspace(static_cast<unsigned char>(text[j]));
      if (boundary) {
        if (has_content) sentences += 1;
        has_content = false;
      } else {
        has_content = true;
      }
      i = j;
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(text[i]))) has_content = true;
    ++i;
  }
  if (has_content) sentences += 1;
  return sentences;
}

struct SurfaceCounts {
  double urls = 0, images = 0, emails = 0, phones = 0;
  double tokens = 0, sentences = 0, avg_tokens = 0, type_token_ratio = 0;
  double smileys_pos = 0, smileys_neg = 0;
  RunCounts exclamations, interrogations;
  double oov = 0;
};

double count_oov(const Tokens& tokens, std::span<const EmbeddingTable> tables) {
  if (tables.empty()) return 0.0;
  double oov = 0;
  for (const auto& t : tokens) {
    const bool known = std::any_of(tables.begin(), tables.end(),
                                   [&](const EmbeddingTable& table) { return table.contains(t); });
    if (!known) oov += 1;
  }
  return oov;
}

SurfaceCounts count_surface(const Question& q, std::span<const EmbeddingTable> tables) {
  SurfaceCounts c;
  std::string residual = q.text;
  for (const auto& url : mask_matches(residual, url_regex(), true)) {
    c.urls += 1;
    if (is_image_url(url)) c.images += 1;
  }
  c.emails = static_cast<double>(mask_matches(residual, email_regex(), false).size());

  for (auto it = std::sregex_iterator(residual.begin(), residual.end(), phone_regex());
       it != std::sregex_iterator(); ++it) {
    const std::string m = it->str();
    const auto digits = std::count_if(m.begin(), m.end(),
                                      [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
    if (digits >= 7) c.phones += 1;
  }

  for (std::string_view piece : split_whitespace(residual)) {
    if (std::find(kPositiveSmileys.begin(), kPositiveSmileys.end(), piece) != kPositiveSmileys.end()) {
      c.smileys_pos += 1;
    } else if (std::find(kNegativeSmileys.begin(), kNegativeSmileys.end(), piece) !=
               kNegativeSmileys.end()) {
      c.smileys_neg += 1;
    }
  }

  c.exclamations = count_runs(residual, '!');
  c.interrogations = count_runs(residual, '?');
  c.tokens = static_cast<double>(q.tokens.size());
  c.sentences = count_sentences(residual);
  if (c.sentences == 0 && !split_whitespace(q.text).empty()) c.sentences = 1;
  c.avg_tokens = safe_ratio(c.tokens, c.sentences);
  const std::set<std::string> types(q.tokens.begin(), q.tokens.end());
  c.type_token_ratio = safe_ratio(static_cast<double>(types.size()), c.tokens);
  c.oov = count_oov(q.tokens, tables);
  return c;
}

const std::vector<std::string>& surface_names() {
  static const std::vector<std::string> names = {
      "urls",        "images",      "emails",      "phones",      "tokens",
      "sentences",   "avg_tokens",  "type_token_ratio", "smileys_pos", "smileys_neg",
      "excl_single", "excl_double", "excl_triple", "quest_single", "quest_double",
      "quest_triple", "oov"};
  return names;
}

std::vector<double> surface_values(const SurfaceCounts& c) {
  return {c.urls,
          c.images,
          c.emails,
          c.phones,
          c.tokens,
          c.sentences,
          c.avg_tokens,
          c.type_token_ratio,
          c.smileys_pos,
          c.smileys_neg,
          c.exclamations.single,
          c.exclamations.twice,
          c.exclamations.triple,
          c.interrogations.single,
          c.interrogations.twice,
          c.interrogations.triple,
          c.oov};
}

NamedValues zip_names(const std::vector<std::string>& names, const std::vector<double>& values) {
  NamedValues out;
  out.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) out.push_back({names[i], values[i]});
  return out;
}

}  // namespace

NamedValues surface_features(const Question& q, std::span<const EmbeddingTable> tables) {
  return zip_names(surface_names(), surface_values(count_surface(q, tables)));
}

NamedValues pair_ratio_features(const Question& q, const Question& q_rel,
                                std::span<const EmbeddingTable> tables) {
  const SurfaceCounts a = count_surface(q, tables);
  const SurfaceCounts b = count_surface(q_rel, tables);
  return {{"ratio_tokens", safe_ratio(a.tokens, b.tokens)},
          {"ratio_sentences", safe_ratio(a.sentences, b.sentences)},
          {"ratio_oov", safe_ratio(a.oov, b.oov)}};
}

double reciprocal_rank_feature(int ir_rank) {
  if (ir_rank < 1) {
    throw ValidationError("reciprocal rank needs ir_rank >= 1, got " + std::to_string(ir_rank));
  }
  return 1.0 / static_cast<double>(ir_rank);
}

FeatureSchema feature_schema(FeatureMode mode, std::span<const EmbeddingTable> tables) {
  if (mode == FeatureMode::precomputed) {
    return {kPrecomputedSchemaVersion, {"cos_vectors", "reciprocal_rank"}};
  }
  FeatureSchema schema{kTextSchemaVersion, {}};
  auto& names = schema.names;
  for (int n = 1; n <= 4; ++n) names.push_back("bleu_p" + std::to_string(n));
  for (int n = 1; n <= 4; ++n) names.push_back("bleu_m" + std::to_string(n));
  for (int n = 1; n <= 4; ++n) names.push_back("bleu_t" + std::to_string(n));
  for (const char* s : {"hyp_len", "ref_len", "len_ratio", "brevity_penalty", "bleu",
                        "unigram_precision", "unigram_recall"}) {
    names.emplace_back(s);
  }
  for (const auto& table : tables) names.push_back("cos_" + table.name());
  for (const auto& s : surface_names()) names.push_back("q_" + s);
  for (const auto& s : surface_names()) names.push_back("r_" + s);
  for (const char* s : {"ratio_tokens", "ratio_sentences", "ratio_oov", "reciprocal_rank"}) {
    names.emplace_back(s);
  }
  return schema;
}

namespace {

Vector vector_or_throw(const Question& q) {
  if (!q.precomputed_vector) {
    throw ValidationError("question '" + q.id + "' has no precomputed vector");
  }
  return *q.precomputed_vector;
}

// Precomputed counterpart of hypothesis_tokens: the translated side's vector.
Vector hypothesis_vector(const PairExample& pair) {
  const Question& q = pair.original;
  if (q.language != pair.retrieved.language && q.translated_vector) return *q.translated_vector;
  return vector_or_throw(q);
}

Tokens hypothesis_tokens(const PairExample& pair) {
  const Question& q = pair.original;
  if (q.language != pair.retrieved.language && q.translated_text) {
    return tokenize(*q.translated_text);
  }
  return q.tokens;
}

}  // namespace

PairFeatures extract_pair_features(const PairExample& pair, std::span<const EmbeddingTable> tables,
                                   FeatureMode mode) {
  FeatureSchema schema = feature_schema(mode, tables);
  std::vector<double> values;
  values.reserve(schema.names.size());

  if (mode == FeatureMode::precomputed) {
    values.push_back(cosine_similarity(hypothesis_vector(pair), vector_or_throw(pair.retrieved)));
    values.push_back(reciprocal_rank_feature(pair.ir_rank));
  } else {
    const Tokens hyp = hypothesis_tokens(pair);
    const Tokens& ref = pair.retrieved.tokens;
    const auto stats = ngram_stats(hyp, ref, 4);
    for (const auto& s : stats) values.push_back(s.precision);
    for (const auto& s : stats) values.push_back(s.clipped_matches);
    for (const auto& s : stats) values.push_back(s.candidate_count);
    const LengthFeatures len = length_features(hyp, ref);
    values.push_back(len.candidate_length);
    values.push_back(len.reference_length);
    values.push_back(len.length_ratio);
    values.push_back(len.brevity_penalty);
    values.push_back(sentence_bleu(hyp, ref));
    const PrecisionRecall pr = unigram_precision_recall(hyp, ref);
    values.push_back(pr.precision);
    values.push_back(pr.recall);
    for (const auto& table : tables) {
      values.push_back(cosine_feature(pair.original, pair.retrieved, table));
    }
    const auto q_surface = surface_values(count_surface(pair.original, tables));
    const auto r_surface = surface_values(count_surface(pair.retrieved, tables));
    values.insert(values.end(), q_surface.begin(), q_surface.end());
    values.insert(values.end(), r_surface.begin(), r_surface.end());
    for (const auto& nv : pair_ratio_features(pair.original, pair.retrieved, tables)) {
      values.push_back(nv.value);
    }
    values.push_back(reciprocal_rank_feature(pair.ir_rank));
  }

  if (values.size() != schema.names.size() || !all_finite(values)) {
    throw NumericError("feature extraction produced an invalid vector for pair " +
                       pair.original.id + "/" + pair.retrieved.id);
  }
  return {Vector(std::move(values)), std::move(schema.names), std::move(schema.version)};
}

FeatureScaler::FeatureScaler(Vector mean, Vector scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.dim() != scale_.dim()) throw ValidationError("scaler mean/scale size mismatch");
  for (double s : scale_) {
    if (!(s > 0.0)) throw ValidationError("scaler scale entries must be positive");
  }
}

FeatureScaler FeatureScaler::fit(std::span<const Vector> rows) {
  if (rows.size() < 2) throw ValidationError("fit_scaler needs at least 2 training rows");
  const std::size_t dim = rows.front().dim();
  Vector mean(dim), scale(dim, 1.0);
  for (const auto& r : rows) {
    if (r.dim() != dim) throw ValidationError("fit_scaler: ragged feature rows");
    for (std::size_t j = 0; j < dim; ++j) mean[j] += r[j];
  }
  const double n = static_cast<double>(rows.size());
  for (double& m : mean) m /= n;
  for (std::size_t j = 0; j < dim; ++j) {
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[j] - mean[j]) * (r[j] - mean[j]);
    const double sd = std::sqrt(ss / n);
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean[j]))) {
      mean[j] = 0.0;
    } else {
      scale[j] = sd;
    }
  }
  return FeatureScaler(std::move(mean), std::move(scale));
}

Vector FeatureScaler::apply(const Vector& features) const {
  if (features.dim() != dim()) {
    throw ValidationError("scaler expects " + std::to_string(dim()) + " features, got " +
                          std::to_string(features.dim()));
  }
  Vector out(features.dim());
  for (std::size_t j = 0; j < out.dim(); ++j) out[j] = (features[j] - mean_[j]) / scale_[j];
  return out;
}

PairFeatures FeatureScaler::apply(const PairFeatures& features) const {
  return {apply(features.values), features.names, features.schema_version};
}

Vector question_vector(const Question& q, std::span<const EmbeddingTable> tables,
                       FeatureMode mode) {
  if (mode == FeatureMode::precomputed) return vector_or_throw(q);
  if (tables.empty()) throw ValidationError("text mode needs at least one embedding table");
  return embed_or_zero(q, tables.front());
}

EncodedPair encode_pair(const PairExample& pair, std::span<const EmbeddingTable> tables,
                        FeatureMode mode, const FeatureScaler* scaler) {
  EncodedPair out;
  out.query_id = pair.original.id;
  out.candidate_id = pair.retrieved.id;
  out.ir_rank = pair.ir_rank;
  out.original_vector = question_vector(pair.original, tables, mode);
  out.retrieved_vector = question_vector(pair.retrieved, tables, mode);
  out.features = extract_pair_features(pair, tables, mode).values;
  if (scaler != nullptr) out.features = scaler->apply(out.features);
  out.label = pair.label;
  out.language = pair.language;
  return out;
}

}  // namespace clann
