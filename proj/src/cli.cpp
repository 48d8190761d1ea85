#include "clann/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "clann/artifacts.hpp"
#include "clann/data.hpp"
#include "clann/error.hpp"
#include "clann/hash.hpp"
#include "clann/keyvalue.hpp"
#include "clann/train.hpp"

namespace clann {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::vector<std::string> embeddings;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::size_t threads = 1;
};

std::vector<EmbeddingTable> load_tables(const std::vector<std::string>& specs) {
  std::vector<EmbeddingTable> tables;
  std::set<std::string> names;
  for (const auto& spec : specs) {
    auto [name, path] = parse_table_spec(spec);
    if (!names.insert(name).second) {
      throw ValidationError("embedding table '" + name + "' given twice");
    }
    tables.push_back(load_embedding_table(path, name));
  }
  return tables;
}

std::string join_args(const std::vector<std::string>& args) {
  std::string out;
  for (const auto& a : args) out += (out.empty() ? "" : " ") + a;
  return out;
}

std::vector<InputFingerprint> dataset_inputs(const fs::path& manifest_path) {
  std::vector<InputFingerprint> inputs{fingerprint_input(manifest_path)};
  const Manifest m = read_manifest(manifest_path);
  static const std::set<std::string> kValues = {"source_language", "target_language", "features"};
  for (const auto& [key, value] : m.entries) {
    if (!kValues.contains(key)) inputs.push_back(fingerprint_input(*m.path_of(key)));
  }
  return inputs;
}

void add_table_inputs(RunManifest& manifest, const std::vector<std::string>& specs) {
  for (const auto& spec : specs) manifest.inputs.push_back(fingerprint_input(parse_table_spec(spec).second));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

TrainConfig resolve_config(const std::optional<std::string>& config_path, const CommonOptions& common,
                           RunManifest& manifest) {
  TrainConfig config;
  if (config_path) {
    config = read_train_config(*config_path);
    manifest.inputs.push_back(fingerprint_input(*config_path));
  }
  if (common.mode) config.mode = parse_train_mode(*common.mode);
  if (common.seed) config.seed = *common.seed;
  config.validate();
  return config;
}

std::string format_eval_row(const EvalResult& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%7.2f %7.2f %7.2f", 100.0 * r.map, 100.0 * r.mrr,
                100.0 * r.avg_rec);
  return buf;
}

ModelFile make_model_file(const TrainConfig& config, const TrainingData& data, ModelParams params,
                          std::span<const EmbeddingTable> tables, RunManifest manifest) {
  ModelFile m;
  m.mode = config.mode;
  m.feature_mode = data.mode;
  m.params = std::move(params);
  m.schema = data.schema;
  m.scaler = data.scaler;
  for (const auto& t : tables) m.tables.push_back(t.fingerprint());
  m.manifest = std::move(manifest);
  return m;
}

int cmd_train(const std::optional<std::string>& config_path, const std::string& data_path,
              const std::string& out_dir, const CommonOptions& common,
              const std::vector<std::string>& args, std::ostream& out) {
  RunManifest manifest;
  manifest.command = join_args(args);
  const TrainConfig config = resolve_config(config_path, common, manifest);
  const Dataset dataset = load_dataset(data_path);
  if (dataset.mode == FeatureMode::text && common.embeddings.empty()) {
    throw ValidationError("text features need at least one --embeddings name=path");
  }
  const std::vector<EmbeddingTable> tables = load_tables(common.embeddings);
  const TrainingData data = prepare_training_data(dataset, tables);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const fs::path model_path = dir / "model.json";
  const fs::path log_path = dir / "train_log.jsonl";
  const fs::path report_path = dir / "report.json";

  manifest.config = format_train_config(config);
  for (auto& in : dataset_inputs(data_path)) manifest.inputs.push_back(std::move(in));
  add_table_inputs(manifest, common.embeddings);
  manifest.seed = config.seed;
  manifest.artifacts = {{"model", model_path.string()},
                        {"log", log_path.string()},
                        {"report", report_path.string()}};
  manifest.wall_clock = utc_timestamp();

  std::ofstream log(log_path);
  if (!log) throw ValidationError("cannot write " + log_path.string());
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) { log << epoch_log_line(r) << '\n' << std::flush; };
  TrainResult result = train(config, data, hooks);

  save_model(make_model_file(config, data, std::move(result.params), tables, manifest), model_path);
  write_text(report_path, report_json(result.report, manifest));

  out << "mode " << to_string(config.mode) << ", best epoch " << result.report.best_epoch << " of "
      << result.report.epochs.size() << " (" << to_string(result.report.stop_reason) << ")\n";
  out << "dev     MAP     MRR  AvgRec\n    " << format_eval_row(result.report.best_dev) << '\n';
  out << "model: " << model_path.string() << '\n';
  return kExitOk;
}

void print_trace(std::ostream& err, const EncodedPair& e, const ForwardTrace& t) {
  auto vec = [&](const char* name, const Vector& v) {
    err << "  " << name << ':';
    char buf[32];
    for (double x : v) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      err << buf;
    }
    err << '\n';
  };
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.17g %.17g", t.task_logit, t.task_prob);
  err << "trace " << e.query_id << ' ' << e.candidate_id << " logit/score " << buf << '\n';
  vec("features", t.features);
  vec("h", t.hidden);
  vec("f", t.joint);
}

int cmd_rerank(const std::string& model_path, const std::string& queries_path,
               const std::optional<std::string>& vectors_path, const std::string& out_path,
               const std::string& source_language, std::size_t depth, bool debug,
               const CommonOptions& common, const std::vector<std::string>& args,
               std::ostream& out, std::ostream& err) {
  const ModelFile model = load_model(model_path);
  const std::vector<EmbeddingTable> tables =
      model.feature_mode == FeatureMode::text ? load_tables(common.embeddings)
                                              : std::vector<EmbeddingTable>{};
  check_resources(model, feature_schema(model.feature_mode, tables), tables);

  std::vector<PairExample> pairs = load_split(queries_path, false, source_language);
  RunManifest manifest;
  manifest.command = join_args(args);
  manifest.inputs = {fingerprint_input(model_path), fingerprint_input(queries_path)};
  if (model.feature_mode == FeatureMode::precomputed) {
    if (!vectors_path) throw ValidationError("this model uses precomputed vectors; pass --vectors");
    attach_vectors(pairs, load_embedding_table(*vectors_path, "vectors"));
    manifest.inputs.push_back(fingerprint_input(*vectors_path));
  }
  add_table_inputs(manifest, common.embeddings);

  const std::vector<EncodedPair> encoded =
      encode_pool(pairs, tables, model.feature_mode, model.scaler);
  if (debug) {
    for (const auto& e : encoded) {
      print_trace(err, e, forward(model.params, e.original_vector, e.retrieved_vector, e.features,
                                  std::nullopt));
    }
  }
  const std::vector<RankedQuery> ranked = rank_pairs(model.params, encoded, depth);
  emit_predictions(ranked, out_path);

  manifest.seed = model.manifest.seed;
  manifest.artifacts = {{"predictions", out_path}, {"model", model_path}};
  manifest.wall_clock = utc_timestamp();
  write_text(out_path + ".manifest.json", manifest_json(manifest));
  out << "reranked " << ranked.size() << " queries, " << encoded.size() << " candidates -> "
      << out_path << '\n';
  return kExitOk;
}

int cmd_score(const std::string& predictions_path, const std::string& gold_path, std::size_t depth,
              std::ostream& out) {
  const auto predictions = read_predictions(predictions_path);
  const auto gold = read_gold(gold_path);
  const auto ranked = join_predictions(predictions, gold, depth);
  const EvalResult r = evaluate(ranked);
  out << "    MAP     MRR  AvgRec\n" << format_eval_row(r) << '\n';
  out << "scored queries: " << r.scored_queries << ", skipped (no relevant): " << r.skipped_queries
      << '\n';
  return kExitOk;
}

std::optional<CellOutcome> load_cell_dir(const fs::path& dir, const GridCell& cell,
                                         const TrainConfig& config) {
  const fs::path result = dir / "result.txt";
  const fs::path model = dir / "model.json";
  if (!fs::exists(result) || !fs::exists(model)) return std::nullopt;
  const KeyValueFile f = read_key_values(result);
  const KeyValue* cfg = f.find("config_hash");
  Fnv1a h;
  h.add(format_train_config(config));
  if (cfg == nullptr || cfg->value != std::to_string(h.value())) return std::nullopt;

  CellOutcome o;
  o.cell = cell;
  o.config = config;
  auto real = [&](const char* key) {
    const KeyValue* kv = f.find(key);
    if (kv == nullptr) throw ValidationError(f.source + ": missing " + key);
    return parse_real(f, *kv);
  };
  auto count = [&](const char* key) { return static_cast<std::size_t>(real(key)); };
  o.dev = {real("dev_map"), real("dev_mrr"), real("dev_avg_rec"), count("scored_queries"),
           count("skipped_queries")};
  o.best_epoch = count("best_epoch");
  o.params = load_model(model).params;
  return o;
}

void save_cell_dir(const fs::path& dir, const CellOutcome& o, const TrainReport& report,
                   const TrainingData& data, std::span<const EmbeddingTable> tables,
                   const RunManifest& base_manifest) {
  fs::create_directories(dir);
  RunManifest manifest = base_manifest;
  manifest.config = format_train_config(o.config);
  manifest.seed = o.config.seed;
  manifest.artifacts = {{"model", (dir / "model.json").string()},
                        {"report", (dir / "report.json").string()}};
  save_model(make_model_file(o.config, data, o.params, tables, manifest), dir / "model.json");
  write_text(dir / "report.json", report_json(report, manifest));

  Fnv1a h;
  h.add(format_train_config(o.config));
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "config_hash = %llu\ndev_map = %.17g\ndev_mrr = %.17g\ndev_avg_rec = %.17g\n"
                "scored_queries = %zu\nskipped_queries = %zu\nbest_epoch = %zu\n",
                static_cast<unsigned long long>(h.value()), o.dev.map, o.dev.mrr, o.dev.avg_rec,
                o.dev.scored_queries, o.dev.skipped_queries, o.best_epoch);
  // Written last: its presence marks the cell as complete.
  write_text(dir / "result.txt", buf);
}

int cmd_gridsearch(const std::string& grid_path, const std::string& data_path,
                   const std::string& out_dir, const std::optional<std::string>& config_path,
                   const CommonOptions& common, const std::vector<std::string>& args,
                   std::ostream& out) {
  RunManifest manifest;
  manifest.command = join_args(args);
  const TrainConfig base = resolve_config(config_path, common, manifest);
  const GridSpec grid = read_grid_spec(read_key_values(grid_path));
  manifest.inputs.push_back(fingerprint_input(grid_path));
  const Dataset dataset = load_dataset(data_path);
  if (dataset.mode == FeatureMode::text && common.embeddings.empty()) {
    throw ValidationError("text features need at least one --embeddings name=path");
  }
  const std::vector<EmbeddingTable> tables = load_tables(common.embeddings);
  const TrainingData data = prepare_training_data(dataset, tables);
  for (auto& in : dataset_inputs(data_path)) manifest.inputs.push_back(std::move(in));
  add_table_inputs(manifest, common.embeddings);
  manifest.wall_clock = utc_timestamp();

  const fs::path dir(out_dir);
  auto cell_dir = [&](const GridCell& c) {
    char name[32];
    std::snprintf(name, sizeof name, "cell-%04zu", c.index);
    return dir / "cells" / name;
  };
  GridOptions options;
  options.threads = common.threads;
  options.load_cell = [&](const GridCell& c, const TrainConfig& config) {
    return load_cell_dir(cell_dir(c), c, config);
  };
  options.save_cell = [&](const CellOutcome& o, const TrainReport& report) {
    save_cell_dir(cell_dir(o.cell), o, report, data, tables, manifest);
  };
  const GridResult result = grid_search(grid, base, data, options);

  std::string table = "cell\tb, d, |h|, |f|, l2\tMAP\tMRR\tAvgRec\tbest_epoch\n";
  for (const auto& c : result.cells) {
    char row[256];
    std::snprintf(row, sizeof row, "%zu\t%s\t%.2f\t%.2f\t%.2f\t%zu\n", c.cell.index,
                  c.cell.tuple().c_str(), 100.0 * c.dev.map, 100.0 * c.dev.mrr,
                  100.0 * c.dev.avg_rec, c.best_epoch);
    table += row;
  }
  write_text(dir / "grid.tsv", table);
  const CellOutcome& best = result.cells[result.best];
  fs::copy_file(cell_dir(best.cell) / "model.json", dir / "best_model.json",
                fs::copy_options::overwrite_existing);
  write_text(dir / "best.txt", "cell = " + std::to_string(best.cell.index) + "\ntuple = " +
                                   best.cell.tuple() + "\nmodel = " +
                                   (cell_dir(best.cell) / "model.json").string() + "\n");
  out << table << "best: cell " << best.cell.index << " (" << best.cell.tuple() << ") -> "
      << (dir / "best_model.json").string() << '\n';
  return kExitOk;
}

int cmd_synth(const std::optional<std::string>& spec_path, const std::string& out_dir,
              const CommonOptions& common, const std::vector<std::string>& args,
              std::ostream& out) {
  SyntheticSpec spec = spec_path ? read_synthetic_spec(*spec_path) : SyntheticSpec{};
  if (common.seed) spec.seed = *common.seed;
  spec.validate();
  const Dataset d = generate_synthetic(spec);
  write_dataset(d, out_dir);
  write_synthetic_spec(spec, fs::path(out_dir) / "synthetic_spec.txt");

  RunManifest manifest;
  manifest.command = join_args(args);
  if (spec_path) manifest.inputs.push_back(fingerprint_input(*spec_path));
  manifest.seed = spec.seed;
  manifest.artifacts = {{"manifest", (fs::path(out_dir) / "manifest.txt").string()}};
  manifest.wall_clock = utc_timestamp();
  write_text(fs::path(out_dir) / "run_manifest.json", manifest_json(manifest));
  out << "wrote synthetic dataset (" << d.labeled_source.size() << " train, "
      << d.unlabeled_target.size() << " unlabeled, " << d.test.size() << " target test pairs) to "
      << out_dir << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-language question re-ranking with adversarial training"};
  app.require_subcommand(1);
  CommonOptions common;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--embeddings", common.embeddings, "Embedding table as name=path (repeatable)");
    cmd->add_option("--seed", common.seed, "Override the random seed");
    cmd->add_option("--mode", common.mode, "fnn | clann | semisup");
    cmd->add_option("--threads", common.threads, "Worker threads (grid search)")
        ->check(CLI::PositiveNumber);
  };

  std::optional<std::string> config_path, vectors_path, spec_path;
  std::string data_path, out_dir, model_path, queries_path, out_path, predictions_path, gold_path,
      grid_path, source_language = "en";
  std::size_t depth = 10;
  bool debug = false;

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", config_path, "Run config (key = value)");
  train_cmd->add_option("--data", data_path, "Dataset manifest")->required();
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  add_common(train_cmd);

  CLI::App* rerank_cmd = app.add_subcommand("rerank", "Score and rank retrieved questions");
  rerank_cmd->add_option("--model", model_path, "Model file")->required();
  rerank_cmd->add_option("--queries", queries_path, "Pairs to rank (JSON lines)")->required();
  rerank_cmd->add_option("--vectors", vectors_path, "Question vectors (precomputed models)");
  rerank_cmd->add_option("--out", out_path, "Prediction file")->required();
  rerank_cmd->add_option("--source-language", source_language, "Default retrieved-side language");
  rerank_cmd->add_option("--depth", depth, "Ranking depth")->check(CLI::PositiveNumber);
  rerank_cmd->add_flag("--debug", debug, "Print forward traces to stderr");
  add_common(rerank_cmd);

  CLI::App* score_cmd = app.add_subcommand("score", "Score predictions against gold labels");
  score_cmd->add_option("--predictions", predictions_path, "Prediction file")->required();
  score_cmd->add_option("--gold", gold_path, "Gold file")->required();
  score_cmd->add_option("--depth", depth, "Ranking depth")->check(CLI::PositiveNumber);

  CLI::App* grid_cmd = app.add_subcommand("gridsearch", "Grid search over hyperparameters");
  grid_cmd->add_option("--grid", grid_path, "Grid file (key = v1, v2, ...)")->required();
  grid_cmd->add_option("--data", data_path, "Dataset manifest")->required();
  grid_cmd->add_option("--out", out_dir, "Output directory")->required();
  grid_cmd->add_option("--config", config_path, "Base run config");
  add_common(grid_cmd);

  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic cross-language dataset");
  synth_cmd->add_option("--spec", spec_path, "Synthetic spec (key = value)");
  synth_cmd->add_option("--out", out_dir, "Output directory")->required();
  add_common(synth_cmd);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*train_cmd) return cmd_train(config_path, data_path, out_dir, common, args, out);
    if (*rerank_cmd) {
      return cmd_rerank(model_path, queries_path, vectors_path, out_path, source_language, depth,
                        debug, common, args, out, err);
    }
    if (*score_cmd) return cmd_score(predictions_path, gold_path, depth, out);
    if (*grid_cmd) return cmd_gridsearch(grid_path, data_path, out_dir, config_path, common, args, out);
    if (*synth_cmd) return cmd_synth(spec_path, out_dir, common, args, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitValidation;
}

}  // namespace clann
