#pragma once

// Training loop for the pair classifier with and without the adversarial
// language discriminator, plus early stopping, grid search and the probes
// used to measure how much language information f still carries.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clann/data.hpp"
#include "clann/embeddings.hpp"
#include "clann/features.hpp"
#include "clann/keyvalue.hpp"
#include "clann/metrics.hpp"
#include "clann/model.hpp"
#include "clann/optim.hpp"

namespace clann {

enum class TrainMode { fnn, clann_unsup, clann_semisup };

std::string to_string(TrainMode mode);
// Accepts fnn, clann, clann_unsup, semisup, clann_semisup.
TrainMode parse_train_mode(const std::string& text);

struct TrainConfig {
  std::size_t batch_size = 8;
  double dropout = 0.2;  // probability of dropping a unit
  std::size_t hidden_dim = 15;
  std::size_t joint_dim = 100;
  std::size_t disc_hidden_dim = 0;  // 0 means "same as hidden_dim"
  double l2_strength = 0.02;
  std::size_t max_epochs = 200;
  std::size_t patience = 15;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::clann_unsup;
  double lambda_gamma = 10.0;
  std::optional<double> fixed_lambda;  // overrides the schedule when set
  bool update_discriminator = true;
  AdamHyper adam;
  std::size_t eval_depth = 10;

  std::size_t effective_disc_hidden() const { return disc_hidden_dim ? disc_hidden_dim : hidden_dim; }
  // Throws ValidationError on the first violated invariant.
  void validate() const;
};

TrainConfig read_train_config(const std::filesystem::path& path);
// Applies recognised keys on top of `base`; unknown keys are errors.
TrainConfig apply_config(const KeyValueFile& file, TrainConfig base);
std::string format_train_config(const TrainConfig& config);

// Encoded, scaled pools. The scaler is fit on the labeled source pool.
struct TrainingData {
  FeatureMode mode = FeatureMode::text;
  FeatureSchema schema;
  FeatureScaler scaler;
  std::vector<EncodedPair> labeled_source;
  std::vector<EncodedPair> unlabeled_target;
  std::vector<EncodedPair> labeled_target;
  std::vector<EncodedPair> dev;
  std::vector<EncodedPair> probe;

  std::size_t embedding_dim() const;
  std::size_t feature_dim() const { return schema.names.size(); }
};

TrainingData prepare_training_data(const Dataset& dataset, std::span<const EmbeddingTable> tables);
std::vector<EncodedPair> encode_pool(std::span<const PairExample> pairs,
                                     std::span<const EmbeddingTable> tables, FeatureMode mode,
                                     const FeatureScaler& scaler);

struct Minibatch {
  std::vector<const EncodedPair*> labeled_source;  // label, language bit 1
  std::vector<const EncodedPair*> labeled_target;  // label, language bit 0
  std::vector<const EncodedPair*> unlabeled_target;  // language bit 0 only

  std::size_t size() const {
    return labeled_source.size() + labeled_target.size() + unlabeled_target.size();
  }
};

// Per-pool share of a batch of size b. The baseline draws only the b/2 labeled
// source examples so its batches line up with the adversarial runs.
struct BatchComposition {
  std::size_t labeled_source = 0;
  std::size_t labeled_target = 0;
  std::size_t unlabeled_target = 0;
};
BatchComposition batch_composition(std::size_t batch_size, TrainMode mode);

// Each pool is walked through shuffled passes; a pool reshuffles when it runs out.
// An epoch is ceil(|D_S| / labeled_source share) batches.
class MinibatchSampler {
 public:
  // Throws ValidationError naming the first empty pool the mode needs.
  MinibatchSampler(std::span<const EncodedPair> labeled_source,
                   std::span<const EncodedPair> unlabeled_target,
                   std::span<const EncodedPair> labeled_target, std::size_t batch_size,
                   TrainMode mode, std::uint64_t seed);

  Minibatch next();
  std::size_t batches_per_epoch() const { return batches_per_epoch_; }
  const BatchComposition& composition() const { return composition_; }

 private:
  struct Cycle {
    std::span<const EncodedPair> pool;
    std::vector<std::size_t> order;
    std::size_t position = 0;
    Rng rng;

    void take(std::size_t count, std::vector<const EncodedPair*>& out);
  };

  BatchComposition composition_;
  std::size_t batches_per_epoch_ = 0;
  Cycle source_;
  Cycle unlabeled_;
  Cycle labeled_target_;
};

// Patience counts consecutive non-improving epochs; improvement is strict.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  // Returns true when `value` is a new best.
  bool observe(std::size_t epoch, double value);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_;
};

enum class StopReason { patience, max_epochs };
std::string to_string(StopReason reason);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double task_loss = 0.0;           // mean L_c over labeled examples
  double discriminator_loss = 0.0;  // mean L_l over all examples, 0 when not computed
  double lambda = 0.0;              // value used by the epoch's last batch
  EvalResult dev;
  std::optional<double> probe_accuracy;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  EvalResult best_dev;
  StopReason stop_reason = StopReason::max_epochs;
  std::size_t batches_per_epoch = 0;
};

struct BatchTrace {
  std::size_t epoch = 0;
  std::size_t batch = 0;  // 1-based within the epoch
  std::size_t step = 0;   // 0-based over the whole run
  double lambda = 0.0;
  const Minibatch* batch_examples = nullptr;
};

struct TrainHooks {
  // Replaces dev-set evaluation; receives the current parameters and 1-based epoch.
  std::function<EvalResult(const ModelParams&, std::size_t)> dev_evaluator;
  std::function<void(const BatchTrace&)> on_batch;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ModelParams params;  // best checkpoint
  TrainReport report;
};

// Stream ids for deriving independent generators from one seed.
enum class RngStream : std::uint64_t {
  init = 1,
  source_order,
  unlabeled_order,
  target_order,
  source_dropout,
  target_dropout,
  probe
};
std::uint64_t derive_seed(std::uint64_t seed, RngStream stream);

ModelDims model_dims(const TrainConfig& config, const TrainingData& data);

TrainResult train(const TrainConfig& config, const TrainingData& data, const TrainHooks& hooks = {});

// Scores every pair in eval mode and groups them into ranked queries.
std::vector<RankedQuery> rank_pairs(const ModelParams& params, std::span<const EncodedPair> pairs,
                                    std::size_t depth = 10);
EvalResult evaluate_model(const ModelParams& params, std::span<const EncodedPair> pairs,
                          std::size_t depth = 10);

// Accuracy of the trained discriminator head at threshold 0.5 (ties go to class 1).
double probe_discriminator(const ModelParams& params, std::span<const EncodedPair> examples);

// Fits a fresh logistic regression on frozen f (eval mode) to predict the
// language bit on `fit`, and reports its accuracy on `held_out`.
double language_probe_accuracy(const ModelParams& params, std::span<const EncodedPair> fit,
                               std::span<const EncodedPair> held_out);
// Splits the pool by query (alternating within each language) and runs the probe.
double language_probe_accuracy(const ModelParams& params, std::span<const EncodedPair> pool);

struct GridSpec {
  std::vector<std::size_t> batch_sizes = {8, 12, 16};
  std::vector<double> dropouts = {0.2, 0.3, 0.4, 0.5};
  std::vector<std::size_t> hidden_dims = {10, 15, 20};
  std::vector<std::size_t> joint_dims = {75, 100, 125};
  std::vector<double> l2_strengths = {0.01, 0.02, 0.03};

  std::size_t cell_count() const;
};

GridSpec read_grid_spec(const KeyValueFile& file);

struct GridCell {
  std::size_t index = 0;
  std::size_t batch_size = 0;
  double dropout = 0.0;
  std::size_t hidden_dim = 0;
  std::size_t joint_dim = 0;
  double l2_strength = 0.0;

  // "b, d, |h|, |f|, l2", e.g. "8, 0.2, 15, 100, 0.02".
  std::string tuple() const;
};

// Cells in lexicographic order of (b, d, |h|, |f|, l2) as listed in the spec.
std::vector<GridCell> grid_cells(const GridSpec& grid);
TrainConfig cell_config(const GridCell& cell, const TrainConfig& base);

struct CellOutcome {
  GridCell cell;
  TrainConfig config;
  EvalResult dev;
  std::size_t best_epoch = 0;
  ModelParams params;
};

struct GridOptions {
  std::size_t threads = 1;
  // Returns a finished cell when one is already on disk.
  std::function<std::optional<CellOutcome>(const GridCell&, const TrainConfig&)> load_cell;
  std::function<void(const CellOutcome&, const TrainReport&)> save_cell;
};

struct GridResult {
  std::vector<CellOutcome> cells;  // in cell order
  std::size_t best = 0;            // index into cells
};

// Best dev MAP wins; ties go to higher dev MRR, then to the earlier cell.
std::size_t select_best_cell(std::span<const CellOutcome> cells);
GridResult grid_search(const GridSpec& grid, const TrainConfig& base, const TrainingData& data,
                       const GridOptions& options = {});

}  // namespace clann
