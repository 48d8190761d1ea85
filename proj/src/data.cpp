#include "clann/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "clann/error.hpp"
#include "clann/keyvalue.hpp"

namespace clann {

namespace {

std::size_t count_originals(std::span<const PairExample> pairs) {
  std::set<std::string> ids;
  for (const auto& p : pairs) ids.insert(p.original.id);
  return ids.size();
}

}  // namespace

std::size_t Dataset::source_originals() const { return count_originals(labeled_source); }
std::size_t Dataset::unlabeled_originals() const { return count_originals(unlabeled_target); }
std::size_t Dataset::target_originals() const { return count_originals(labeled_target); }

std::vector<QueryGroup> group_by_query(std::span<const PairExample> pairs) {
  std::vector<QueryGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& p : pairs) {
    auto [it, fresh] = index.try_emplace(p.original.id, groups.size());
    if (fresh) groups.push_back({p.original, {}});
    groups[it->second].retrieved.push_back({p.retrieved, p.ir_rank, p.label});
  }
  return groups;
}

std::vector<PairExample> flatten(std::span<const QueryGroup> groups, LanguageBit language) {
  std::vector<PairExample> pairs;
  for (const auto& g : groups) {
    for (const auto& r : g.retrieved) {
      pairs.push_back({g.original, r.question, r.ir_rank, r.label, language});
    }
  }
  return pairs;
}

std::optional<std::filesystem::path> Manifest::path_of(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) return std::nullopt;
  std::filesystem::path p(it->second);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest read_manifest(const std::filesystem::path& path) {
  const KeyValueFile file = read_key_values(path);
  Manifest m;
  m.base_dir = path.parent_path();
  for (const auto& kv : file.entries) m.entries[kv.key] = kv.value;
  return m;
}

namespace {

using nlohmann::json;

int parse_label(const std::string& label, const std::string& where) {
  if (label == "PerfectMatch" || label == "Relevant") return 1;
  if (label == "Irrelevant") return 0;
  throw ValidationError(where + ": unknown label '" + label + "'");
}

std::string required_string(const json& record, const char* key, const std::string& where) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw ValidationError(where + ": missing or empty field '" + key + "'");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& record, const char* key,
                                           const std::string& where) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(where + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

Question make_question(std::string id, std::string language, std::string text) {
  Question q;
  q.id = std::move(id);
  q.language = std::move(language);
  q.text = std::move(text);
  q.tokens = tokenize(q.text);
  return q;
}

}  // namespace

std::vector<PairExample> load_split(const std::filesystem::path& path, bool labeled,
                                    const std::string& source_language) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open split file " + path.string());

  std::vector<PairExample> pairs;
  std::set<std::pair<std::string, std::string>> keys;
  std::unordered_map<std::string, std::pair<std::string, std::string>> originals;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": malformed record (" + e.what() + ")");
    }
    if (!record.is_object()) throw ValidationError(where + ": record must be an object");

    const std::string orig_id = required_string(record, "orig_id", where);
    const std::string orig_lang = required_string(record, "orig_lang", where);
    const std::string orig_text = required_string(record, "orig_text", where);
    auto rel_it = record.find("rel_id");
    if (rel_it == record.end() || !rel_it->is_string() || rel_it->get<std::string>().empty()) {
      throw ValidationError(where + ": original '" + orig_id + "' has no retrieved question");
    }
    const std::string rel_id = rel_it->get<std::string>();
    const std::string rel_text = required_string(record, "rel_text", where);
    const std::string rel_lang = optional_string(record, "rel_lang", where).value_or(source_language);

    auto rank_it = record.find("rel_rank");
    if (rank_it == record.end() || !rank_it->is_number_integer() || rank_it->get<int>() < 1) {
      throw ValidationError(where + ": rel_rank must be an integer >= 1");
    }

    if (!keys.insert({orig_id, rel_id}).second) {
      throw ValidationError(where + ": duplicate pair " + orig_id + "/" + rel_id);
    }
    auto [orig_it, fresh] = originals.try_emplace(orig_id, orig_lang, orig_text);
    if (!fresh && (orig_it->second.first != orig_lang || orig_it->second.second != orig_text)) {
      throw ValidationError(where + ": original '" + orig_id +
                            "' disagrees with an earlier record");
    }

    PairExample pair;
    pair.original = make_question(orig_id, orig_lang, orig_text);
    pair.original.translated_text = optional_string(record, "orig_translation", where);
    pair.retrieved = make_question(rel_id, rel_lang, rel_text);
    pair.ir_rank = rank_it->get<int>();
    pair.language = orig_lang == source_language ? LanguageBit::source : LanguageBit::target;

    if (auto label = optional_string(record, "label", where)) {
      pair.label = parse_label(*label, where);
    } else if (labeled) {
      throw ValidationError(where + ": labeled split record has no label");
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void attach_vectors(std::vector<PairExample>& pairs, const EmbeddingTable& vectors) {
  auto lookup = [&](Question& q) {
    const Vector* v = vectors.find(q.id);
    if (v == nullptr) throw ValidationError("no vector for question '" + q.id + "'");
    q.precomputed_vector = *v;
    if (const Vector* t = vectors.find(q.id + "#translation")) q.translated_vector = *t;
  };
  for (auto& p : pairs) {
    lookup(p.original);
    lookup(p.retrieved);
  }
}

void check_disjoint(const Dataset& d) {
  std::map<std::pair<std::string, std::string>, std::string> owner;
  auto visit = [&](const std::vector<PairExample>& pairs, const std::string& pool) {
    for (const auto& p : pairs) {
      auto [it, fresh] = owner.try_emplace({p.original.id, p.retrieved.id}, pool);
      if (!fresh && it->second != pool) {
        throw ValidationError("pair " + p.original.id + "/" + p.retrieved.id +
                              " appears in both '" + it->second + "' and '" + pool + "'");
      }
    }
  };
  visit(d.labeled_source, "train");
  visit(d.unlabeled_target, "unlabeled");
  visit(d.labeled_target, "target_train");
  visit(d.dev, "dev");
  visit(d.test, "test");
  visit(d.probe, "probe");
  for (const auto& [name, pairs] : d.extra) visit(pairs, name);
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  Dataset d;
  if (auto it = m.entries.find("source_language"); it != m.entries.end()) d.source_language = it->second;
  if (auto it = m.entries.find("target_language"); it != m.entries.end()) d.target_language = it->second;
  if (auto it = m.entries.find("features"); it != m.entries.end()) {
    if (it->second == "text") {
      d.mode = FeatureMode::text;
    } else if (it->second == "precomputed") {
      d.mode = FeatureMode::precomputed;
    } else {
      throw ValidationError(manifest_path.string() + ": features must be text or precomputed");
    }
  }

  static const std::set<std::string> kReserved = {"source_language", "target_language",
                                                  "features", "vectors"};
  for (const auto& [key, value] : m.entries) {
    if (kReserved.contains(key)) continue;
    const auto path = *m.path_of(key);
    if (key == "train") {
      d.labeled_source = load_split(path, true, d.source_language);
    } else if (key == "unlabeled") {
      d.unlabeled_target = load_split(path, false, d.source_language);
      for (const auto& p : d.unlabeled_target) {
        if (p.label) {
          throw ValidationError(path.string() + ": unlabeled split carries a label for " +
                                p.original.id + "/" + p.retrieved.id);
        }
      }
    } else if (key == "target_train") {
      d.labeled_target = load_split(path, true, d.source_language);
    } else if (key == "dev") {
      d.dev = load_split(path, true, d.source_language);
    } else if (key == "test") {
      d.test = load_split(path, true, d.source_language);
    } else if (key == "probe") {
      d.probe = load_split(path, false, d.source_language);
    } else {
      d.extra[key] = load_split(path, false, d.source_language);
    }
  }
  if (d.labeled_source.empty()) throw ValidationError(manifest_path.string() + ": no train split");

  if (d.mode == FeatureMode::precomputed) {
    const auto vectors_path = m.path_of("vectors");
    if (!vectors_path) {
      throw ValidationError(manifest_path.string() + ": precomputed features need 'vectors'");
    }
    const EmbeddingTable vectors = load_embedding_table(*vectors_path, "vectors");
    for (auto* pool : {&d.labeled_source, &d.unlabeled_target, &d.labeled_target, &d.dev, &d.test,
                       &d.probe}) {
      attach_vectors(*pool, vectors);
    }
    for (auto& [name, pairs] : d.extra) attach_vectors(pairs, vectors);
  }
  check_disjoint(d);
  return d;
}

PairExample unlabeled_pairing(Rng& rng, std::span<const QueryGroup> target_originals,
                              std::span<const RetrievedQuestion> related_pool) {
  if (target_originals.empty()) throw ValidationError("unlabeled pairing: no target originals");
  std::uniform_int_distribution<std::size_t> pick_orig(0, target_originals.size() - 1);
  const QueryGroup& group = target_originals[pick_orig(rng)];
  std::span<const RetrievedQuestion> choices =
      group.retrieved.empty() ? related_pool : std::span<const RetrievedQuestion>(group.retrieved);
  if (choices.empty()) throw ValidationError("unlabeled pairing: no related questions");
  std::uniform_int_distribution<std::size_t> pick_rel(0, choices.size() - 1);
  const RetrievedQuestion& rel = choices[pick_rel(rng)];
  return {group.original, rel.question, rel.ir_rank, std::nullopt, LanguageBit::target};
}

SemisupSplit split_for_semisup(std::span<const PairExample> labeled_source, double fraction,
                               std::uint64_t seed, const std::string& target_language) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("semi-supervised split fraction must be in (0, 1)");
  }
  std::vector<QueryGroup> groups = group_by_query(labeled_source);
  if (groups.size() < 2) throw ValidationError("need at least 2 originals to split");
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.original.id < b.original.id; });
  Rng rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  auto first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(groups.size())));
  first = std::clamp<std::size_t>(first, 1, groups.size() - 1);

  SemisupSplit out;
  std::vector<QueryGroup> source(groups.begin(), groups.begin() + static_cast<long>(first));
  std::vector<QueryGroup> target(groups.begin() + static_cast<long>(first), groups.end());
  for (auto& g : target) {
    Question& q = g.original;
    if (q.precomputed_vector) {
      if (!q.translated_vector) {
        throw ValidationError("original '" + q.id + "' has no translated vector");
      }
      std::swap(q.precomputed_vector, q.translated_vector);
    } else {
      if (!q.translated_text) {
        throw ValidationError("original '" + q.id + "' has no translation");
      }
      std::string english = std::move(q.text);
      q.text = std::move(*q.translated_text);
      q.translated_text = std::move(english);
      q.tokens = tokenize(q.text);
    }
    q.language = target_language;
  }
  out.source_half = flatten(source, LanguageBit::source);
  out.target_half = flatten(target, LanguageBit::target);
  return out;
}

void SyntheticSpec::validate() const {
  if (latent_dim == 0 || output_dim == 0) throw ValidationError("synthetic: zero dimension");
  if (rotated_dims > output_dim || rotated_dims % 2 != 0) {
    throw ValidationError("synthetic: rotated_dims must be even and <= output_dim");
  }
  if (noise < 0.0 || ir_noise < 0.0 || translation_noise < 0.0) throw ValidationError("synthetic: noise must be >= 0");
  if (!(relevance_threshold >= -1.0 && relevance_threshold < 1.0)) {
    throw ValidationError("synthetic: relevance_threshold must be in [-1, 1)");
  }
  if (per_query == 0) throw ValidationError("synthetic: per_query must be >= 1");
  if (source_train_queries == 0 || dev_queries == 0) {
    throw ValidationError("synthetic: train and dev splits need queries");
  }
}

namespace {

template <typename T>
void assign_count(const KeyValueFile& f, const KeyValue& kv, T& field) {
  const long long v = parse_integer(f, kv);
  if (v < 0) throw ValidationError(f.where(kv) + ": '" + kv.key + "' must be >= 0");
  field = static_cast<T>(v);
}

}  // namespace

SyntheticSpec read_synthetic_spec(const std::filesystem::path& path) {
  const KeyValueFile f = read_key_values(path);
  SyntheticSpec s;
  for (const auto& kv : f.entries) {
    const std::string& k = kv.key;
    if (k == "latent_dim") assign_count(f, kv, s.latent_dim);
    else if (k == "output_dim") assign_count(f, kv, s.output_dim);
    else if (k == "rotated_dims") assign_count(f, kv, s.rotated_dims);
    else if (k == "rotation_angle") s.rotation_angle = parse_real(f, kv);
    else if (k == "target_scale") s.target_scale = parse_real(f, kv);
    else if (k == "target_offset") s.target_offset = parse_real(f, kv);
    else if (k == "noise") s.noise = parse_real(f, kv);
    else if (k == "retrieval_affinity") s.retrieval_affinity = parse_real(f, kv);
    else if (k == "relevance_threshold") s.relevance_threshold = parse_real(f, kv);
    else if (k == "ir_noise") s.ir_noise = parse_real(f, kv);
    else if (k == "translation_noise") s.translation_noise = parse_real(f, kv);
    else if (k == "source_train_queries") assign_count(f, kv, s.source_train_queries);
    else if (k == "dev_queries") assign_count(f, kv, s.dev_queries);
    else if (k == "source_test_queries") assign_count(f, kv, s.source_test_queries);
    else if (k == "target_test_queries") assign_count(f, kv, s.target_test_queries);
    else if (k == "unlabeled_target_queries") assign_count(f, kv, s.unlabeled_target_queries);
    else if (k == "target_train_queries") assign_count(f, kv, s.target_train_queries);
    else if (k == "probe_queries") assign_count(f, kv, s.probe_queries);
    else if (k == "per_query") assign_count(f, kv, s.per_query);
    else if (k == "seed") assign_count(f, kv, s.seed);
    else if (k == "source_language") s.source_language = kv.value;
    else if (k == "target_language") s.target_language = kv.value;
    else throw ValidationError(f.where(kv) + ": unknown synthetic spec key '" + k + "'");
  }
  s.validate();
  return s;
}

void write_synthetic_spec(const SyntheticSpec& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  out << "latent_dim = " << s.latent_dim << "\noutput_dim = " << s.output_dim
      << "\nrotated_dims = " << s.rotated_dims << "\nrotation_angle = " << s.rotation_angle
      << "\ntarget_scale = " << s.target_scale << "\ntarget_offset = " << s.target_offset
      << "\nnoise = " << s.noise << "\nretrieval_affinity = " << s.retrieval_affinity
      << "\nrelevance_threshold = " << s.relevance_threshold << "\nir_noise = " << s.ir_noise
      << "\ntranslation_noise = " << s.translation_noise
      << "\nsource_train_queries = " << s.source_train_queries
      << "\ndev_queries = " << s.dev_queries << "\nsource_test_queries = " << s.source_test_queries
      << "\ntarget_test_queries = " << s.target_test_queries
      << "\nunlabeled_target_queries = " << s.unlabeled_target_queries
      << "\ntarget_train_queries = " << s.target_train_queries
      << "\nprobe_queries = " << s.probe_queries << "\nper_query = " << s.per_query
      << "\nseed = " << s.seed << "\nsource_language = " << s.source_language
      << "\ntarget_language = " << s.target_language << '\n';
}

namespace {

class SyntheticWorld {
 public:
  explicit SyntheticWorld(const SyntheticSpec& spec) : spec_(spec), rng_(spec.seed) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.latent_dim));
    source_map_ = Matrix(spec.output_dim, spec.latent_dim);
    for (double& x : source_map_.span()) x = gaussian() * scale;

    target_map_ = source_map_;
    offset_ = Vector(spec.output_dim);
    const std::size_t first_rotated = spec.output_dim - spec.rotated_dims;
    const double c = std::cos(spec.rotation_angle);
    const double s = std::sin(spec.rotation_angle);
    for (std::size_t r = first_rotated; r + 1 < spec.output_dim; r += 2) {
      for (std::size_t k = 0; k < spec.latent_dim; ++k) {
        const double a = source_map_(r, k);
        const double b = source_map_(r + 1, k);
        target_map_(r, k) = spec.target_scale * (c * a - s * b);
        target_map_(r + 1, k) = spec.target_scale * (s * a + c * b);
      }
    }
    if (spec.rotated_dims > 0) {
      Vector direction(spec.rotated_dims);
      for (double& x : direction) x = gaussian();
      const double n = norm(direction);
      for (std::size_t i = 0; i < spec.rotated_dims; ++i) {
        offset_[first_rotated + i] = spec.target_offset * direction[i] / n;
      }
    }
  }

  // One original with its retrieved list; language_bit picks the rendering of the original.
  std::vector<PairExample> make_query(const std::string& id, LanguageBit language, bool keep_labels) {
    const bool target = language == LanguageBit::target;
    const Vector latent = draw_latent();

    Question original = make_question(id, target ? spec_.target_language : spec_.source_language,
                                      "synthetic question " + id);
    original.precomputed_vector = render(latent, target);
    original.translated_vector = render(latent, !target);
    for (double& x : *original.translated_vector) x += spec_.translation_noise * gaussian();

    struct Candidate {
      Question question;
      double ir_score;
      int label;
    };
    std::vector<Candidate> candidates;
    for (std::size_t k = 0; k < spec_.per_query; ++k) {
      Vector rel_latent = draw_latent();
      if (spec_.retrieval_affinity != 0.0) rel_latent = rel_latent + spec_.retrieval_affinity * latent;
      const double cos = cosine_similarity(latent, rel_latent);
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "_R%02zu", k + 1);
      Question rel = make_question(id + suffix, spec_.source_language,
                                   "synthetic question " + id + suffix);
      rel.precomputed_vector = render(rel_latent, false);
      candidates.push_back({std::move(rel), cos + spec_.ir_noise * gaussian(),
                            cos > spec_.relevance_threshold ? 1 : 0});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.ir_score > b.ir_score; });

    std::vector<PairExample> pairs;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      PairExample p;
      p.original = original;
      p.retrieved = std::move(candidates[k].question);
      p.ir_rank = static_cast<int>(k + 1);
      if (keep_labels) p.label = candidates[k].label;
      p.language = language;
      pairs.push_back(std::move(p));
    }
    return pairs;
  }

  std::vector<PairExample> make_split(const std::string& prefix, std::size_t queries,
                                      LanguageBit language, bool keep_labels) {
    std::vector<PairExample> out;
    for (std::size_t i = 0; i < queries; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s%04zu", prefix.c_str(), i + 1);
      auto pairs = make_query(id, language, keep_labels);
      out.insert(out.end(), std::make_move_iterator(pairs.begin()),
                 std::make_move_iterator(pairs.end()));
    }
    return out;
  }

 private:
  double gaussian() { return normal_(rng_); }

  Vector draw_latent() {
    Vector t(spec_.latent_dim);
    for (double& x : t) x = gaussian();
    return t;
  }

  Vector render(const Vector& latent, bool target) {
    Vector v = matvec(target ? target_map_ : source_map_, latent);
    if (target) v = v + offset_;
    for (double& x : v) x += spec_.noise * gaussian();
    return v;
  }

  const SyntheticSpec& spec_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  Matrix source_map_;
  Matrix target_map_;
  Vector offset_;
};

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticWorld world(spec);
  Dataset d;
  d.source_language = spec.source_language;
  d.target_language = spec.target_language;
  d.mode = FeatureMode::precomputed;
  d.labeled_source = world.make_split("SRC-TRAIN-", spec.source_train_queries, LanguageBit::source, true);
  d.dev = world.make_split("SRC-DEV-", spec.dev_queries, LanguageBit::source, true);
  d.extra["test_source"] =
      world.make_split("SRC-TEST-", spec.source_test_queries, LanguageBit::source, true);
  d.test = world.make_split("TGT-TEST-", spec.target_test_queries, LanguageBit::target, true);
  d.unlabeled_target =
      world.make_split("TGT-UNL-", spec.unlabeled_target_queries, LanguageBit::target, false);
  d.labeled_target =
      world.make_split("TGT-TRAIN-", spec.target_train_queries, LanguageBit::target, true);
  d.probe = world.make_split("SRC-PROBE-", spec.probe_queries, LanguageBit::source, true);
  auto target_probe = world.make_split("TGT-PROBE-", spec.probe_queries, LanguageBit::target, true);
  d.probe.insert(d.probe.end(), target_probe.begin(), target_probe.end());
  return d;
}

namespace {

std::string label_name(int label) { return label == 1 ? "Relevant" : "Irrelevant"; }

void write_vector_line(std::ostream& out, const std::string& id, const Vector& v) {
  char buf[32];
  out << id;
  for (double x : v) {
    std::snprintf(buf, sizeof buf, " %.17g", x);
    out << buf;
  }
  out << '\n';
}

}  // namespace

void write_split(std::span<const PairExample> pairs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& p : pairs) {
    json record;
    record["orig_id"] = p.original.id;
    record["orig_lang"] = p.original.language;
    record["orig_text"] = p.original.text;
    if (p.original.translated_text) record["orig_translation"] = *p.original.translated_text;
    record["rel_id"] = p.retrieved.id;
    record["rel_lang"] = p.retrieved.language;
    record["rel_rank"] = p.ir_rank;
    record["rel_text"] = p.retrieved.text;
    if (p.label) record["label"] = label_name(*p.label);
    out << record.dump() << '\n';
  }
}

void write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, const std::vector<PairExample>*>> splits = {
      {"train", &d.labeled_source}, {"unlabeled", &d.unlabeled_target},
      {"target_train", &d.labeled_target}, {"dev", &d.dev},
      {"test", &d.test},           {"probe", &d.probe}};
  for (const auto& [name, pairs] : d.extra) splits.emplace_back(name, &pairs);

  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw ValidationError("cannot write manifest in " + dir.string());
  manifest << "source_language = " << d.source_language << "\ntarget_language = "
           << d.target_language << "\nfeatures = "
           << (d.mode == FeatureMode::precomputed ? "precomputed" : "text") << '\n';

  std::vector<std::pair<std::string, const Vector*>> vectors;
  std::set<std::string> seen;
  auto remember = [&](const std::string& id, const std::optional<Vector>& v) {
    if (v && seen.insert(id).second) vectors.emplace_back(id, &*v);
  };

  for (const auto& [name, pairs] : splits) {
    if (pairs->empty()) continue;
    write_split(*pairs, dir / (name + ".jsonl"));
    manifest << name << " = " << name << ".jsonl\n";
    const bool labeled = std::all_of(pairs->begin(), pairs->end(),
                                     [](const auto& p) { return p.label.has_value(); });
    if (labeled && name != "train" && name != "target_train") {
      std::ofstream gold(dir / (name + ".gold"));
      for (const auto& p : *pairs) {
        gold << p.original.id << '\t' << p.retrieved.id << '\t' << label_name(*p.label) << '\n';
      }
    }
    for (const auto& p : *pairs) {
      remember(p.original.id, p.original.precomputed_vector);
      remember(p.original.id + "#translation", p.original.translated_vector);
      remember(p.retrieved.id, p.retrieved.precomputed_vector);
    }
  }

  if (!vectors.empty()) {
    std::ofstream out(dir / "vectors.txt");
    out << vectors.size() << ' ' << vectors.front().second->dim() << '\n';
    for (const auto& [id, v] : vectors) write_vector_line(out, id, *v);
    manifest << "vectors = vectors.txt\n";
  }
}

}  // namespace clann
