#include "clann/artifacts.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clann/error.hpp"
#include "clann/hash.hpp"

namespace clann {

using nlohmann::json;

InputFingerprint fingerprint_input(const std::filesystem::path& path) {
  return {path.string(), hash_file(path)};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_fingerprint(const TableFingerprint& fp) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fp.vocab_hash));
  return fp.name + " (dim " + std::to_string(fp.dimension) + ", vocab " + buf + ")";
}

namespace {

json manifest_to_json(const RunManifest& m) {
  json inputs = json::array();
  for (const auto& in : m.inputs) inputs.push_back({{"path", in.path}, {"hash", in.hash}});
  return {{"command", m.command}, {"config", m.config},     {"inputs", inputs},
          {"seed", m.seed},       {"artifacts", m.artifacts}, {"wall_clock", m.wall_clock},
          {"version", m.version}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config").get<std::string>();
  for (const auto& in : j.at("inputs")) {
    m.inputs.push_back({in.at("path").get<std::string>(), in.at("hash").get<std::uint64_t>()});
  }
  m.seed = j.at("seed").get<std::uint64_t>();
  m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  m.wall_clock = j.at("wall_clock").get<std::string>();
  m.version = j.at("version").get<std::string>();
  return m;
}

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.values()}};
}

Matrix matrix_from_json(const json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("values").get<std::vector<double>>());
}

Vector vector_from_json(const json& j) { return Vector(j.get<std::vector<double>>()); }

json eval_to_json(const EvalResult& r) {
  return {{"map", r.map},
          {"mrr", r.mrr},
          {"avg_rec", r.avg_rec},
          {"scored_queries", r.scored_queries},
          {"skipped_queries", r.skipped_queries}};
}

json epoch_to_json(const EpochRecord& r) {
  json j = {{"epoch", r.epoch},
            {"task_loss", r.task_loss},
            {"discriminator_loss", r.discriminator_loss},
            {"lambda", r.lambda},
            {"dev_map", r.dev.map},
            {"dev_mrr", r.dev.mrr},
            {"dev_avg_rec", r.dev.avg_rec}};
  j["probe_accuracy"] = r.probe_accuracy ? json(*r.probe_accuracy) : json(nullptr);
  return j;
}

}  // namespace

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  model.params.validate();
  const ModelParams& p = model.params;
  json tables = json::array();
  for (const auto& t : model.tables) {
    tables.push_back({{"name", t.name}, {"dimension", t.dimension}, {"vocab_hash", t.vocab_hash}});
  }
  const json j = {
      {"format", kModelFormat},
      {"mode", to_string(model.mode)},
      {"feature_mode", model.feature_mode == FeatureMode::text ? "text" : "precomputed"},
      {"dims",
       {{"embedding_dim", p.dims.embedding_dim},
        {"feature_dim", p.dims.feature_dim},
        {"hidden_dim", p.dims.hidden_dim},
        {"joint_dim", p.dims.joint_dim},
        {"disc_hidden_dim", p.dims.disc_hidden_dim}}},
      {"weights",
       {{"input_layer", matrix_to_json(p.input_layer)},
        {"hidden_layer", matrix_to_json(p.hidden_layer)},
        {"output_weights", p.output_weights.values()},
        {"disc_layer", matrix_to_json(p.disc_layer)},
        {"disc_weights", p.disc_weights.values()}}},
      {"schema", {{"version", model.schema.version}, {"names", model.schema.names}}},
      {"scaler", {{"mean", model.scaler.mean().values()}, {"scale", model.scaler.scale().values()}}},
      {"tables", tables},
      {"manifest", manifest_to_json(model.manifest)}};

  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write model file " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw ValidationError("error while writing " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  const std::string where = "model file " + path.string();
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(where + ": not valid JSON (" + e.what() + ")");
  }

  ModelFile m;
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw ValidationError(where + ": unsupported format '" + j.at("format").get<std::string>() +
                            "', expected " + kModelFormat);
    }
    m.mode = parse_train_mode(j.at("mode").get<std::string>());
    const std::string fm = j.at("feature_mode").get<std::string>();
    if (fm != "text" && fm != "precomputed") throw ValidationError(where + ": bad feature_mode");
    m.feature_mode = fm == "text" ? FeatureMode::text : FeatureMode::precomputed;

    const json& d = j.at("dims");
    ModelParams& p = m.params;
    p.dims = {d.at("embedding_dim").get<std::size_t>(), d.at("feature_dim").get<std::size_t>(),
              d.at("hidden_dim").get<std::size_t>(), d.at("joint_dim").get<std::size_t>(),
              d.at("disc_hidden_dim").get<std::size_t>()};
    const json& w = j.at("weights");
    p.input_layer = matrix_from_json(w.at("input_layer"));
    p.hidden_layer = matrix_from_json(w.at("hidden_layer"));
    p.output_weights = vector_from_json(w.at("output_weights"));
    p.disc_layer = matrix_from_json(w.at("disc_layer"));
    p.disc_weights = vector_from_json(w.at("disc_weights"));

    m.schema.version = j.at("schema").at("version").get<std::string>();
    m.schema.names = j.at("schema").at("names").get<std::vector<std::string>>();
    m.scaler = FeatureScaler(vector_from_json(j.at("scaler").at("mean")),
                             vector_from_json(j.at("scaler").at("scale")));
    for (const auto& t : j.at("tables")) {
      m.tables.push_back({t.at("name").get<std::string>(), t.at("dimension").get<std::size_t>(),
                          t.at("vocab_hash").get<std::uint64_t>()});
    }
    m.manifest = manifest_from_json(j.at("manifest"));
  } catch (const json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }

  try {
    m.params.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  const auto blocks = m.params.blocks();
  for (std::size_t b = 0; b < ModelParams::kBlockCount; ++b) {
    if (!all_finite(blocks[b])) {
      throw ValidationError(where + ": non-finite weights in " + ModelParams::kBlockNames[b]);
    }
  }
  const std::size_t fd = m.params.dims.feature_dim;
  if (m.schema.names.size() != fd) {
    throw ValidationError(where + ": schema has " + std::to_string(m.schema.names.size()) +
                          " features, dimension record says " + std::to_string(fd));
  }
  if (m.scaler.dim() != fd || m.scaler.scale().dim() != fd) {
    throw ValidationError(where + ": scaler size does not match feature_dim " + std::to_string(fd));
  }
  for (double s : m.scaler.scale()) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError(where + ": invalid scaler scale");
  }
  if (!all_finite(m.scaler.mean().span())) throw ValidationError(where + ": invalid scaler mean");
  if (m.feature_mode == FeatureMode::text) {
    if (m.tables.empty()) throw ValidationError(where + ": text model records no embedding tables");
    if (m.tables.front().dimension != m.params.dims.embedding_dim) {
      throw ValidationError(where + ": first table dimension " +
                            std::to_string(m.tables.front().dimension) +
                            " differs from embedding_dim " +
                            std::to_string(m.params.dims.embedding_dim));
    }
  }
  return m;
}

void check_resources(const ModelFile& model, const FeatureSchema& schema,
                     std::span<const EmbeddingTable> tables) {
  std::vector<TableFingerprint> supplied;
  for (const auto& t : tables) supplied.push_back(t.fingerprint());
  if (model.feature_mode == FeatureMode::text && supplied != model.tables) {
    std::string msg = "embedding tables do not match the model.\n  model:   ";
    for (const auto& fp : model.tables) msg += format_fingerprint(fp) + "; ";
    msg += "\n  supplied: ";
    for (const auto& fp : supplied) msg += format_fingerprint(fp) + "; ";
    throw ValidationError(msg);
  }
  if (!(schema == model.schema)) {
    throw ValidationError("feature schema mismatch: model has " + model.schema.version + " with " +
                          std::to_string(model.schema.names.size()) + " features, supplied " +
                          schema.version + " with " + std::to_string(schema.names.size()));
  }
}

std::string epoch_log_line(const EpochRecord& record) { return epoch_to_json(record).dump(); }

std::string report_json(const TrainReport& report, const RunManifest& manifest) {
  json epochs = json::array();
  for (const auto& e : report.epochs) epochs.push_back(epoch_to_json(e));
  const EpochRecord* best = nullptr;
  for (const auto& e : report.epochs) {
    if (e.epoch == report.best_epoch) best = &e;
  }
  json j = {{"best_epoch", report.best_epoch},
            {"best_dev", eval_to_json(report.best_dev)},
            {"stop_reason", to_string(report.stop_reason)},
            {"epochs_run", report.epochs.size()},
            {"batches_per_epoch", report.batches_per_epoch},
            {"epochs", epochs},
            {"manifest", manifest_to_json(manifest)}};
  j["best_probe_accuracy"] =
      best && best->probe_accuracy ? json(*best->probe_accuracy) : json(nullptr);
  return j.dump(1);
}

std::string manifest_json(const RunManifest& manifest) { return manifest_to_json(manifest).dump(1); }

}  // namespace clann
