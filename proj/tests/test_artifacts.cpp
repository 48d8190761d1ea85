#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "clann/artifacts.hpp"
#include "clann/error.hpp"

using namespace clann;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("clann_art_" + name);
}

ModelFile sample_model() {
  Rng rng(8);
  ModelFile m;
  m.mode = TrainMode::clann_unsup;
  m.feature_mode = FeatureMode::text;
  m.params = ModelParams::glorot({2, 3, 4, 5, 4}, rng);
  // Values that do not survive a naive decimal round trip.
  m.params.output_weights[0] = 0.1 + 0.2;
  m.params.output_weights[1] = std::nextafter(1.0, 2.0);
  m.params.output_weights[2] = -1e-310;
  m.schema = {"test-v1", {"a", "b", "c"}};
  m.scaler = FeatureScaler(Vector{1.0 / 3.0, 0.0, -2.5}, Vector{0.7, 1.0, 1e-3});
  m.tables = {{"emb", 2, 0xdeadbeefcafef00dULL}};
  m.manifest.command = "train";
  m.manifest.seed = 42;
  m.manifest.config = "batch_size = 8\n";
  m.manifest.inputs = {{"data/manifest.txt", 123}};
  m.manifest.artifacts = {{"model", "model.json"}};
  m.manifest.wall_clock = "2026-01-01T00:00:00Z";
  return m;
}

}  // namespace

TEST(ModelFile, RoundTripIsBitExact) {
  const ModelFile m = sample_model();
  const auto path = temp_path("model.json");
  save_model(m, path);
  const ModelFile r = load_model(path);
  EXPECT_EQ(r.params, m.params);
  EXPECT_EQ(r.schema, m.schema);
  EXPECT_EQ(r.scaler.mean(), m.scaler.mean());
  EXPECT_EQ(r.scaler.scale(), m.scaler.scale());
  EXPECT_EQ(r.tables, m.tables);
  EXPECT_EQ(r.manifest, m.manifest);
  EXPECT_EQ(r.mode, m.mode);
  EXPECT_EQ(r.feature_mode, m.feature_mode);

  // Saving the loaded model again gives the same bytes.
  const auto again = temp_path("model2.json");
  save_model(r, again);
  std::ifstream a(path), b(again);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  std::filesystem::remove(path);
  std::filesystem::remove(again);
}

TEST(ModelFile, RejectsTamperedFiles) {
  const auto path = temp_path("tamper.json");
  save_model(sample_model(), path);
  nlohmann::json j;
  {
    std::ifstream in(path);
    in >> j;
  }
  auto rewrite = [&](const nlohmann::json& doc) {
    const auto p = temp_path("tampered.json");
    std::ofstream(p) << doc.dump();
    return p;
  };

  nlohmann::json bad_format = j;
  bad_format["format"] = "something-else/9";
  EXPECT_THROW(load_model(rewrite(bad_format)), ValidationError);

  nlohmann::json bad_schema = j;
  bad_schema["schema"]["names"].push_back("extra");
  EXPECT_THROW(load_model(rewrite(bad_schema)), ValidationError);

  EXPECT_THROW(load_model(temp_path("does-not-exist.json")), ValidationError);
  std::ofstream(temp_path("garbage.json")) << "{ not json";
  EXPECT_THROW(load_model(temp_path("garbage.json")), ValidationError);
  std::filesystem::remove(path);
}

TEST(ModelFile, RejectsNonFiniteWeights) {
  ModelFile m = sample_model();
  m.params.hidden_layer(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const auto path = temp_path("nan.json");
  save_model(m, path);
  EXPECT_THROW(load_model(path), ValidationError);
  std::filesystem::remove(path);
}

TEST(CheckResources, MismatchListsBothFingerprints) {
  const ModelFile m = sample_model();
  const EmbeddingTable other("emb", 2, {{"x", Vector{1, 2}}});
  const std::vector<EmbeddingTable> tables = {other};
  try {
    check_resources(m, m.schema, tables);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(format_fingerprint(m.tables[0])), std::string::npos) << msg;
    EXPECT_NE(msg.find(format_fingerprint(other.fingerprint())), std::string::npos) << msg;
  }
  EXPECT_THROW(check_resources(m, FeatureSchema{"test-v1", {"a"}}, tables), ValidationError);

  ModelFile matching = m;
  matching.tables = {other.fingerprint()};
  EXPECT_NO_THROW(check_resources(matching, m.schema, tables));
}

TEST(EpochLog, OneJsonObjectWithoutTimestamp) {
  EpochRecord r;
  r.epoch = 3;
  r.task_loss = 0.5;
  r.lambda = 0.25;
  r.dev.map = 0.75;
  r.probe_accuracy = 0.6;
  const std::string line = epoch_log_line(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j.at("epoch"), 3);
  EXPECT_EQ(j.at("dev_map"), 0.75);
  EXPECT_EQ(j.at("lambda"), 0.25);
  EXPECT_FALSE(j.contains("wall_clock"));
  EXPECT_EQ(epoch_log_line(r), line);
}

TEST(RunManifestJson, CarriesSeedAndInputs) {
  const ModelFile m = sample_model();
  const auto j = nlohmann::json::parse(manifest_json(m.manifest));
  EXPECT_EQ(j.at("seed"), 42);
  EXPECT_EQ(j.at("version"), kToolVersion);
  EXPECT_EQ(j.at("inputs").size(), 1u);
}

TEST(FingerprintInput, ChangesWithContent) {
  const auto path = temp_path("input.txt");
  std::ofstream(path) << "alpha";
  const auto a = fingerprint_input(path);
  std::ofstream(path) << "beta";
  const auto b = fingerprint_input(path);
  EXPECT_NE(a.hash, b.hash);
  EXPECT_EQ(a.path, b.path);
  std::filesystem::remove(path);
}
