#pragma once

// On-disk artifacts: the JSON model file, run manifests, the line-delimited
// training log and the final training report.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "clann/embeddings.hpp"
#include "clann/features.hpp"
#include "clann/model.hpp"
#include "clann/train.hpp"

namespace clann {

inline constexpr const char* kModelFormat = "clann-model/1";
inline constexpr const char* kToolVersion = "0.1.0";

struct InputFingerprint {
  std::string path;
  std::uint64_t hash = 0;

  bool operator==(const InputFingerprint&) const = default;
};

struct RunManifest {
  std::string command;
  std::string config;  // resolved key = value text
  std::vector<InputFingerprint> inputs;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> artifacts;
  std::string wall_clock;  // ISO-8601 UTC
  std::string version = kToolVersion;

  bool operator==(const RunManifest&) const = default;
};

InputFingerprint fingerprint_input(const std::filesystem::path& path);
std::string utc_timestamp();

struct ModelFile {
  TrainMode mode = TrainMode::clann_unsup;
  FeatureMode feature_mode = FeatureMode::text;
  ModelParams params;
  FeatureSchema schema;
  FeatureScaler scaler;
  std::vector<TableFingerprint> tables;
  RunManifest manifest;
};

void save_model(const ModelFile& model, const std::filesystem::path& path);
// Validates the format tag, every shape against the dimension record, the
// schema and scaler sizes, and that all weights are finite.
ModelFile load_model(const std::filesystem::path& path);

// Throws ValidationError when the schema or the embedding tables supplied at
// rerank time differ from the ones recorded at training time. The message
// lists both fingerprints.
void check_resources(const ModelFile& model, const FeatureSchema& schema,
                     std::span<const EmbeddingTable> tables);

std::string format_fingerprint(const TableFingerprint& fp);

// One JSON object per line; no timestamps so reruns are byte-identical.
std::string epoch_log_line(const EpochRecord& record);
std::string report_json(const TrainReport& report, const RunManifest& manifest);
std::string manifest_json(const RunManifest& manifest);

}  // namespace clann
