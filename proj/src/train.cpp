#include "clann/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "clann/error.hpp"
#include "clann/keyvalue.hpp"

namespace clann {

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::fnn: return "fnn";
    case TrainMode::clann_unsup: return "clann_unsup";
    case TrainMode::clann_semisup: return "clann_semisup";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& text) {
  if (text == "fnn") return TrainMode::fnn;
  if (text == "clann" || text == "clann_unsup") return TrainMode::clann_unsup;
  if (text == "semisup" || text == "clann_semisup") return TrainMode::clann_semisup;
  throw ValidationError("unknown training mode '" + text + "' (expected fnn, clann or semisup)");
}

std::string to_string(StopReason reason) {
  return reason == StopReason::patience ? "patience" : "max_epochs";
}

void TrainConfig::validate() const {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw ValidationError("batch_size must be even and >= 2, got " + std::to_string(batch_size));
  }
  if (mode == TrainMode::clann_semisup && batch_size < 3) {
    throw ValidationError("semi-supervised batches need batch_size >= 3");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ValidationError("dropout must be in [0, 1), got " + std::to_string(dropout));
  }
  if (patience < 1) throw ValidationError("patience must be >= 1");
  if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (hidden_dim == 0 || joint_dim == 0) throw ValidationError("layer sizes must be >= 1");
  if (!(l2_strength >= 0.0) || !std::isfinite(l2_strength)) {
    throw ValidationError("l2_strength must be finite and >= 0");
  }
  if (fixed_lambda && !(*fixed_lambda >= 0.0 && std::isfinite(*fixed_lambda))) {
    throw ValidationError("fixed_lambda must be finite and >= 0");
  }
  if (!(adam.learning_rate > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0)) {
    throw ValidationError("invalid ADAM hyperparameters");
  }
  if (eval_depth == 0) throw ValidationError("eval_depth must be >= 1");
}

namespace {

std::size_t parse_count(const KeyValueFile& f, const KeyValue& kv) {
  const long long v = parse_integer(f, kv);
  if (v < 0) throw ValidationError(f.where(kv) + ": '" + kv.key + "' must be >= 0");
  return static_cast<std::size_t>(v);
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

TrainConfig apply_config(const KeyValueFile& f, TrainConfig c) {
  for (const auto& kv : f.entries) {
    const std::string& k = kv.key;
    if (k == "batch_size") c.batch_size = parse_count(f, kv);
    else if (k == "dropout") c.dropout = parse_real(f, kv);
    else if (k == "hidden_dim") c.hidden_dim = parse_count(f, kv);
    else if (k == "joint_dim") c.joint_dim = parse_count(f, kv);
    else if (k == "disc_hidden_dim") c.disc_hidden_dim = parse_count(f, kv);
    else if (k == "l2_strength") c.l2_strength = parse_real(f, kv);
    else if (k == "max_epochs") c.max_epochs = parse_count(f, kv);
    else if (k == "patience") c.patience = parse_count(f, kv);
    else if (k == "seed") c.seed = parse_count(f, kv);
    else if (k == "mode") c.mode = parse_train_mode(kv.value);
    else if (k == "lambda_gamma") c.lambda_gamma = parse_real(f, kv);
    else if (k == "fixed_lambda") {
      if (kv.value == "none") c.fixed_lambda.reset();
      else c.fixed_lambda = parse_real(f, kv);
    }
    else if (k == "update_discriminator") c.update_discriminator = parse_bool(f, kv);
    else if (k == "learning_rate") c.adam.learning_rate = parse_real(f, kv);
    else if (k == "beta1") c.adam.beta1 = parse_real(f, kv);
    else if (k == "beta2") c.adam.beta2 = parse_real(f, kv);
    else if (k == "epsilon") c.adam.epsilon = parse_real(f, kv);
    else if (k == "eval_depth") c.eval_depth = parse_count(f, kv);
    else throw ValidationError(f.where(kv) + ": unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

TrainConfig read_train_config(const std::filesystem::path& path) {
  return apply_config(read_key_values(path), TrainConfig{});
}

std::string format_train_config(const TrainConfig& c) {
  std::string out;
  auto line = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  line("mode", to_string(c.mode));
  line("batch_size", std::to_string(c.batch_size));
  line("dropout", format_real(c.dropout));
  line("hidden_dim", std::to_string(c.hidden_dim));
  line("joint_dim", std::to_string(c.joint_dim));
  line("disc_hidden_dim", std::to_string(c.disc_hidden_dim));
  line("l2_strength", format_real(c.l2_strength));
  line("max_epochs", std::to_string(c.max_epochs));
  line("patience", std::to_string(c.patience));
  line("seed", std::to_string(c.seed));
  line("lambda_gamma", format_real(c.lambda_gamma));
  line("fixed_lambda", c.fixed_lambda ? format_real(*c.fixed_lambda) : "none");
  line("update_discriminator", c.update_discriminator ? "true" : "false");
  line("learning_rate", format_real(c.adam.learning_rate));
  line("beta1", format_real(c.adam.beta1));
  line("beta2", format_real(c.adam.beta2));
  line("epsilon", format_real(c.adam.epsilon));
  line("eval_depth", std::to_string(c.eval_depth));
  return out;
}

std::size_t TrainingData::embedding_dim() const {
  if (labeled_source.empty()) throw ValidationError("training data has no labeled source pairs");
  return labeled_source.front().original_vector.dim();
}

std::vector<EncodedPair> encode_pool(std::span<const PairExample> pairs,
                                     std::span<const EmbeddingTable> tables, FeatureMode mode,
                                     const FeatureScaler& scaler) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(encode_pair(p, tables, mode, &scaler));
  return out;
}

TrainingData prepare_training_data(const Dataset& dataset, std::span<const EmbeddingTable> tables) {
  if (dataset.mode == FeatureMode::text && tables.empty()) {
    throw ValidationError("text features need at least one embedding table (--embeddings name=path)");
  }
  if (dataset.labeled_source.empty()) throw ValidationError("no labeled source pairs");
  if (dataset.dev.empty()) throw ValidationError("no dev pairs");

  TrainingData data;
  data.mode = dataset.mode;
  data.schema = feature_schema(dataset.mode, tables);

  std::vector<EncodedPair> raw;
  raw.reserve(dataset.labeled_source.size());
  for (const auto& p : dataset.labeled_source) raw.push_back(encode_pair(p, tables, dataset.mode));
  std::vector<Vector> rows;
  rows.reserve(raw.size());
  for (const auto& e : raw) rows.push_back(e.features);
  data.scaler = FeatureScaler::fit(rows);
  for (auto& e : raw) e.features = data.scaler.apply(e.features);
  data.labeled_source = std::move(raw);

  data.unlabeled_target = encode_pool(dataset.unlabeled_target, tables, dataset.mode, data.scaler);
  for (auto& e : data.unlabeled_target) {
    e.label.reset();
    e.language = LanguageBit::target;
  }
  data.labeled_target = encode_pool(dataset.labeled_target, tables, dataset.mode, data.scaler);
  for (auto& e : data.labeled_target) e.language = LanguageBit::target;
  data.dev = encode_pool(dataset.dev, tables, dataset.mode, data.scaler);
  data.probe = encode_pool(dataset.probe, tables, dataset.mode, data.scaler);
  return data;
}

BatchComposition batch_composition(std::size_t b, TrainMode mode) {
  if (mode == TrainMode::clann_semisup) {
    const std::size_t third = b / 3;
    return {b - 2 * third, third, third};
  }
  if (mode == TrainMode::fnn) return {b / 2, 0, 0};
  return {b / 2, 0, b / 2};
}

void MinibatchSampler::Cycle::take(std::size_t count, std::vector<const EncodedPair*>& out) {
  for (std::size_t i = 0; i < count; ++i) {
    if (position == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      position = 0;
    }
    out.push_back(&pool[order[position++]]);
  }
}

MinibatchSampler::MinibatchSampler(std::span<const EncodedPair> labeled_source,
                                   std::span<const EncodedPair> unlabeled_target,
                                   std::span<const EncodedPair> labeled_target,
                                   std::size_t batch_size, TrainMode mode, std::uint64_t seed)
    : composition_(batch_composition(batch_size, mode)) {
  auto setup = [&](Cycle& c, std::span<const EncodedPair> pool, std::size_t share,
                   const char* name, RngStream stream) {
    if (share > 0 && pool.empty()) {
      throw ValidationError(std::string("minibatch sampling: the ") + name + " pool is empty");
    }
    c.pool = pool;
    c.order.resize(pool.size());
    std::iota(c.order.begin(), c.order.end(), std::size_t{0});
    c.position = c.order.size();  // shuffle on first use
    c.rng.seed(derive_seed(seed, stream));
  };
  setup(source_, labeled_source, composition_.labeled_source, "labeled source",
        RngStream::source_order);
  setup(unlabeled_, unlabeled_target, composition_.unlabeled_target, "unlabeled target",
        RngStream::unlabeled_order);
  setup(labeled_target_, labeled_target, composition_.labeled_target, "labeled target",
        RngStream::target_order);
  batches_per_epoch_ =
      (labeled_source.size() + composition_.labeled_source - 1) / composition_.labeled_source;
}

Minibatch MinibatchSampler::next() {
  Minibatch m;
  source_.take(composition_.labeled_source, m.labeled_source);
  labeled_target_.take(composition_.labeled_target, m.labeled_target);
  unlabeled_.take(composition_.unlabeled_target, m.unlabeled_target);
  return m;
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_(-std::numeric_limits<double>::infinity()) {
  if (patience == 0) throw ValidationError("patience must be >= 1");
}

bool EarlyStopping::observe(std::size_t epoch, double value) {
  if (value > best_) {
    best_ = value;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::uint64_t derive_seed(std::uint64_t seed, RngStream stream) {
  // splitmix64 finaliser over (seed, stream).
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(stream) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ModelDims model_dims(const TrainConfig& config, const TrainingData& data) {
  return {data.embedding_dim(), data.feature_dim(), config.hidden_dim, config.joint_dim,
          config.effective_disc_hidden()};
}

std::vector<RankedQuery> rank_pairs(const ModelParams& params, std::span<const EncodedPair> pairs,
                                    std::size_t depth) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<RankedCandidate>> grouped;
  for (const auto& p : pairs) {
    auto [it, fresh] = grouped.try_emplace(p.query_id);
    if (fresh) order.push_back(p.query_id);
    const double score =
        predict_score(params, p.original_vector, p.retrieved_vector, p.features);
    it->second.push_back({p.candidate_id, score, p.label.value_or(0) == 1, p.ir_rank});
  }
  std::vector<RankedQuery> out;
  out.reserve(order.size());
  for (const auto& id : order) out.push_back(rank_query(id, std::move(grouped[id]), depth));
  return out;
}

EvalResult evaluate_model(const ModelParams& params, std::span<const EncodedPair> pairs,
                          std::size_t depth) {
  const auto ranked = rank_pairs(params, pairs, depth);
  return evaluate(ranked);
}

double probe_discriminator(const ModelParams& params, std::span<const EncodedPair> examples) {
  if (examples.empty()) throw ValidationError("probe_discriminator: no examples");
  std::size_t correct = 0;
  for (const auto& e : examples) {
    const ForwardTrace t =
        forward(params, e.original_vector, e.retrieved_vector, e.features, std::nullopt);
    const DiscriminatorOutput d = discriminator_forward(params, t.joint);
    const int predicted = d.prob >= 0.5 ? 1 : 0;
    if (predicted == static_cast<int>(e.language)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

namespace {

std::vector<Vector> frozen_joint(const ModelParams& params, std::span<const EncodedPair> examples) {
  std::vector<Vector> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    out.push_back(
        forward(params, e.original_vector, e.retrieved_vector, e.features, std::nullopt).joint);
  }
  return out;
}

}  // namespace

double language_probe_accuracy(const ModelParams& params, std::span<const EncodedPair> fit,
                               std::span<const EncodedPair> held_out) {
  if (fit.empty() || held_out.empty()) throw ValidationError("language probe: empty split");
  const std::vector<Vector> x_fit = frozen_joint(params, fit);
  const std::vector<Vector> x_test = frozen_joint(params, held_out);
  const std::size_t dim = params.dims.joint_dim;

  const FeatureScaler scaler = x_fit.size() >= 2
                                   ? FeatureScaler::fit(x_fit)
                                   : FeatureScaler(Vector(dim, 0.0), Vector(dim, 1.0));
  std::vector<Vector> xs;
  xs.reserve(x_fit.size());
  for (const auto& x : x_fit) xs.push_back(scaler.apply(x));

  // Full-batch gradient descent on L2-regularised logistic loss.
  constexpr int kIterations = 500;
  constexpr double kStep = 0.5;
  constexpr double kL2 = 1e-3;
  Vector w(dim);
  double bias = 0.0;
  const double n = static_cast<double>(xs.size());
  for (int it = 0; it < kIterations; ++it) {
    Vector gw(dim);
    double gb = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double y = static_cast<double>(fit[i].language);
      const double err = sigmoid(dot(w, xs[i]) + bias) - y;
      for (std::size_t k = 0; k < dim; ++k) gw[k] += err * xs[i][k];
      gb += err;
    }
    for (std::size_t k = 0; k < dim; ++k) w[k] -= kStep * (gw[k] / n + kL2 * w[k]);
    bias -= kStep * gb / n;
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < x_test.size(); ++i) {
    const int predicted = sigmoid(dot(w, scaler.apply(x_test[i])) + bias) >= 0.5 ? 1 : 0;
    if (predicted == static_cast<int>(held_out[i].language)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x_test.size());
}

double language_probe_accuracy(const ModelParams& params, std::span<const EncodedPair> pool) {
  std::vector<EncodedPair> fit, held_out;
  std::unordered_map<std::string, bool> goes_to_fit;
  std::size_t seen[2] = {0, 0};
  for (const auto& e : pool) {
    auto [it, fresh] = goes_to_fit.try_emplace(e.query_id, false);
    if (fresh) it->second = seen[static_cast<int>(e.language)]++ % 2 == 0;
    (it->second ? fit : held_out).push_back(e);
  }
  return language_probe_accuracy(params, fit, held_out);
}

namespace {

std::string first_nonfinite_block(const ModelParams& p) {
  const auto blocks = p.blocks();
  for (std::size_t b = 0; b < ModelParams::kBlockCount; ++b) {
    if (!all_finite(blocks[b])) return ModelParams::kBlockNames[b];
  }
  return {};
}

[[noreturn]] void numeric_abort(std::size_t epoch, std::size_t batch, const std::string& what,
                                const std::string& block) {
  throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " +
                     what + (block.empty() ? "" : " (parameter block " + block + ")"));
}

struct BatchLosses {
  double task_sum = 0.0;
  std::size_t task_count = 0;
  double disc_sum = 0.0;
  std::size_t disc_count = 0;
};

}  // namespace

TrainResult train(const TrainConfig& config, const TrainingData& data, const TrainHooks& hooks) {
  config.validate();
  if (data.dev.empty() && !hooks.dev_evaluator) throw ValidationError("train: empty dev set");
  for (const auto& e : data.dev) {
    if (!e.label) throw ValidationError("train: dev pair " + e.query_id + "/" + e.candidate_id +
                                        " has no label");
  }
  for (const auto& e : data.labeled_source) {
    if (!e.label) throw ValidationError("train: labeled source pair " + e.query_id + "/" +
                                        e.candidate_id + " has no label");
  }

  const ModelDims dims = model_dims(config, data);
  Rng init_rng(derive_seed(config.seed, RngStream::init));
  ModelParams params = ModelParams::glorot(dims, init_rng);

  MinibatchSampler sampler(data.labeled_source, data.unlabeled_target, data.labeled_target,
                           config.batch_size, config.mode, config.seed);
  Rng source_dropout(derive_seed(config.seed, RngStream::source_dropout));
  Rng target_dropout(derive_seed(config.seed, RngStream::target_dropout));

  const bool adversarial = config.mode != TrainMode::fnn;
  const bool disc_updates = adversarial && config.update_discriminator;
  BlockMask active = kAllBlocks;
  if (!disc_updates) {
    for (std::size_t b = ModelParams::kFirstDiscBlock; b < ModelParams::kBlockCount; ++b) {
      active[b] = false;
    }
  }

  AdamState adam(dims, config.adam);
  const LambdaSchedule schedule{config.lambda_gamma,
                                config.max_epochs * sampler.batches_per_epoch()};
  const double keep = 1.0 - config.dropout;
  const double batch_scale = 2.0 / static_cast<double>(config.batch_size);

  TrainReport report;
  report.batches_per_epoch = sampler.batches_per_epoch();
  EarlyStopping stopping(config.patience);
  ModelParams best = params;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    BatchLosses losses;
    double lambda = 0.0;
    for (std::size_t batch = 1; batch <= sampler.batches_per_epoch(); ++batch, ++step) {
      const Minibatch mb = sampler.next();
      lambda = !adversarial ? 0.0 : config.fixed_lambda ? *config.fixed_lambda
                                                          : lambda_at(schedule, step);
      if (hooks.on_batch) hooks.on_batch({epoch, batch, step, lambda, &mb});

      // Unlabeled pairs only matter through the discriminator.
      const bool disc_gradients = adversarial && (lambda != 0.0 || disc_updates);
      Gradients grads = Gradients::zeros(dims, GradientSource::combined);

      auto process = [&](const EncodedPair& e, bool labeled, Rng& dropout_rng) {
        const DropoutMasks masks = sample_masks(dims, keep, dropout_rng);
        ForwardTrace trace =
            forward(params, e.original_vector, e.retrieved_vector, e.features, masks);
        const int language = static_cast<int>(e.language);
        if (labeled) {
          const double lc = binary_cross_entropy_from_logit(trace.task_logit, *e.label);
          if (!std::isfinite(lc)) {
            numeric_abort(epoch, batch, "non-finite task loss", first_nonfinite_block(params));
          }
          losses.task_sum += lc;
          ++losses.task_count;
        }
        if (adversarial) {
          attach_discriminator(params, trace);
          const double ll = binary_cross_entropy_from_logit(trace.disc_logit, language);
          if (!std::isfinite(ll)) {
            numeric_abort(epoch, batch, "non-finite discriminator loss",
                          first_nonfinite_block(params));
          }
          losses.disc_sum += ll;
          ++losses.disc_count;
        }
        if (!labeled && !disc_gradients) return;
        const Gradients g =
            backward(params, trace, labeled ? e.label : std::nullopt,
                     disc_gradients ? std::optional<int>(language) : std::nullopt, lambda);
        grads.add(g, batch_scale);
      };

      for (const auto* e : mb.labeled_source) process(*e, true, source_dropout);
      if (adversarial) {
        for (const auto* e : mb.labeled_target) process(*e, true, target_dropout);
        for (const auto* e : mb.unlabeled_target) process(*e, false, target_dropout);
      }

      if (const std::string bad = first_nonfinite_block(grads.values); !bad.empty()) {
        numeric_abort(epoch, batch, "non-finite gradient", bad);
      }
      adam.step(params, grads, config.l2_strength, active);
      if (const std::string bad = first_nonfinite_block(params); !bad.empty()) {
        numeric_abort(epoch, batch, "non-finite parameters after update", bad);
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.task_loss = losses.task_count ? losses.task_sum / static_cast<double>(losses.task_count) : 0.0;
    record.discriminator_loss =
        losses.disc_count ? losses.disc_sum / static_cast<double>(losses.disc_count) : 0.0;
    record.lambda = lambda;
    record.dev = hooks.dev_evaluator ? hooks.dev_evaluator(params, epoch)
                                     : evaluate_model(params, data.dev, config.eval_depth);
    if (!data.probe.empty()) record.probe_accuracy = probe_discriminator(params, data.probe);
    report.epochs.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);

    if (stopping.observe(epoch, record.dev.map)) {
      best = params;
      report.best_epoch = epoch;
      report.best_dev = record.dev;
    }
    if (stopping.should_stop()) {
      report.stop_reason = StopReason::patience;
      break;
    }
  }
  return {std::move(best), std::move(report)};
}

std::size_t GridSpec::cell_count() const {
  return batch_sizes.size() * dropouts.size() * hidden_dims.size() * joint_dims.size() *
         l2_strengths.size();
}

GridSpec read_grid_spec(const KeyValueFile& f) {
  GridSpec g;
  auto counts = [&](const KeyValue& kv) {
    std::vector<std::size_t> out;
    for (const auto& item : parse_list(kv.value)) {
      const long long v = parse_integer(f, KeyValue{kv.key, item, kv.line});
      if (v < 1) throw ValidationError(f.where(kv) + ": grid values must be >= 1");
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  };
  auto reals = [&](const KeyValue& kv) {
    std::vector<double> out;
    for (const auto& item : parse_list(kv.value)) out.push_back(parse_real(f, KeyValue{kv.key, item, kv.line}));
    return out;
  };
  for (const auto& kv : f.entries) {
    if (kv.key == "batch_size") g.batch_sizes = counts(kv);
    else if (kv.key == "dropout") g.dropouts = reals(kv);
    else if (kv.key == "hidden_dim") g.hidden_dims = counts(kv);
    else if (kv.key == "joint_dim") g.joint_dims = counts(kv);
    else if (kv.key == "l2_strength") g.l2_strengths = reals(kv);
    else throw ValidationError(f.where(kv) + ": unknown grid key '" + kv.key + "'");
  }
  if (g.cell_count() == 0) throw ValidationError(f.source + ": grid has no cells");
  return g;
}

std::string GridCell::tuple() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu, %g, %zu, %zu, %g", batch_size, dropout, hidden_dim,
                joint_dim, l2_strength);
  return buf;
}

std::vector<GridCell> grid_cells(const GridSpec& g) {
  std::vector<GridCell> cells;
  for (auto b : g.batch_sizes)
    for (auto d : g.dropouts)
      for (auto h : g.hidden_dims)
        for (auto f : g.joint_dims)
          for (auto l2 : g.l2_strengths) cells.push_back({cells.size(), b, d, h, f, l2});
  return cells;
}

TrainConfig cell_config(const GridCell& cell, const TrainConfig& base) {
  TrainConfig c = base;
  c.batch_size = cell.batch_size;
  c.dropout = cell.dropout;
  c.hidden_dim = cell.hidden_dim;
  c.joint_dim = cell.joint_dim;
  c.l2_strength = cell.l2_strength;
  c.seed = derive_seed(base.seed, RngStream::init) + cell.index;
  return c;
}

std::size_t select_best_cell(std::span<const CellOutcome> cells) {
  if (cells.empty()) throw ValidationError("grid search: no cells");
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const EvalResult& a = cells[i].dev;
    const EvalResult& b = cells[best].dev;
    if (a.map > b.map || (a.map == b.map && a.mrr > b.mrr)) best = i;
  }
  return best;
}

GridResult grid_search(const GridSpec& grid, const TrainConfig& base, const TrainingData& data,
                       const GridOptions& options) {
  const std::vector<GridCell> cells = grid_cells(grid);
  if (cells.empty()) throw ValidationError("grid search: empty grid");
  for (const auto& cell : cells) cell_config(cell, base).validate();

  std::vector<std::optional<CellOutcome>> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex save_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const TrainConfig config = cell_config(cells[i], base);
        if (options.load_cell) {
          if (auto done = options.load_cell(cells[i], config)) {
            outcomes[i] = std::move(done);
            continue;
          }
        }
        TrainResult r = train(config, data);
        CellOutcome outcome{cells[i], config, r.report.best_dev, r.report.best_epoch,
                            std::move(r.params)};
        if (options.save_cell) {
          std::lock_guard lock(save_mutex);
          options.save_cell(outcome, r.report);
        }
        outcomes[i] = std::move(outcome);
      } catch (...) {
        std::lock_guard lock(save_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, cells.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  GridResult result;
  for (auto& o : outcomes) result.cells.push_back(std::move(*o));
  result.best = select_best_cell(result.cells);
  return result;
}

}  // namespace clann
