#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "clann/artifacts.hpp"
#include "clann/cli.hpp"
#include "clann/metrics.hpp"
#include "clann/train.hpp"

using namespace clann;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "clann");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "clann_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    std::ofstream(root_ / "spec.txt") << "source_train_queries = 20\ndev_queries = 6\n"
                                         "source_test_queries = 2\ntarget_test_queries = 8\n"
                                         "unlabeled_target_queries = 10\nprobe_queries = 3\n"
                                         "seed = 5\n";
    std::ofstream(root_ / "config.txt") << "hidden_dim = 6\njoint_dim = 8\nmax_epochs = 3\n"
                                           "seed = 2\nmode = clann\n";
  }

  static fs::path root_;
};

fs::path CliTest::root_;

}  // namespace

TEST_F(CliTest, SynthTrainRerankScore) {
  const fs::path data = root_ / "data", model = root_ / "model";
  CliRun synth = run({"synth", "--spec", (root_ / "spec.txt").string(), "--out", data.string()});
  ASSERT_EQ(synth.code, 0) << synth.err;
  EXPECT_TRUE(fs::exists(data / "manifest.txt"));
  EXPECT_TRUE(fs::exists(data / "run_manifest.json"));

  CliRun tr = run({"train", "--config", (root_ / "config.txt").string(), "--data",
                (data / "manifest.txt").string(), "--out", model.string()});
  ASSERT_EQ(tr.code, 0) << tr.err;
  for (const char* f : {"model.json", "train_log.jsonl", "report.json"}) {
    EXPECT_TRUE(fs::exists(model / f)) << f;
  }

  const fs::path pred = root_ / "pred.tsv";
  CliRun rr = run({"rerank", "--model", (model / "model.json").string(), "--queries",
                (data / "test.jsonl").string(), "--vectors", (data / "vectors.txt").string(),
                "--out", pred.string()});
  ASSERT_EQ(rr.code, 0) << rr.err;
  EXPECT_TRUE(fs::exists(pred.string() + ".manifest.json"));

  CliRun sc = run({"score", "--predictions", pred.string(), "--gold", (data / "test.gold").string()});
  ASSERT_EQ(sc.code, 0) << sc.err;

  // The CLI score matches in-process evaluation of the saved model.
  const ModelFile m = load_model(model / "model.json");
  const Dataset d = load_dataset(data / "manifest.txt");
  const auto test = encode_pool(d.test, {}, d.mode, m.scaler);
  const EvalResult direct = evaluate_model(m.params, test);
  char expected[64];
  std::snprintf(expected, sizeof expected, "%7.2f", 100.0 * direct.map);
  EXPECT_NE(sc.out.find(expected), std::string::npos) << sc.out << " vs " << expected;
}

TEST_F(CliTest, TrainingLogIsByteIdenticalAcrossRuns) {
  const fs::path data = root_ / "data_repeat";
  ASSERT_EQ(run({"synth", "--spec", (root_ / "spec.txt").string(), "--out", data.string()}).code, 0);
  std::string logs[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root_ / ("repeat" + std::to_string(i));
    ASSERT_EQ(run({"train", "--config", (root_ / "config.txt").string(), "--data",
                   (data / "manifest.txt").string(), "--out", out.string()})
                  .code,
              0);
    logs[i] = slurp(out / "train_log.jsonl");
  }
  EXPECT_FALSE(logs[0].empty());
  EXPECT_EQ(logs[0], logs[1]);
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
  const fs::path data = root_ / "data_seed";
  ASSERT_EQ(run({"synth", "--spec", (root_ / "spec.txt").string(), "--out", data.string()}).code, 0);
  const fs::path out = root_ / "seeded";
  ASSERT_EQ(run({"train", "--config", (root_ / "config.txt").string(), "--data",
                 (data / "manifest.txt").string(), "--out", out.string(), "--seed", "99"})
                .code,
            0);
  EXPECT_EQ(load_model(out / "model.json").manifest.seed, 99u);
}

TEST_F(CliTest, GridSearchResumesFromFinishedCells) {
  const fs::path data = root_ / "data_grid", out = root_ / "grid";
  ASSERT_EQ(run({"synth", "--spec", (root_ / "spec.txt").string(), "--out", data.string()}).code, 0);
  std::ofstream(root_ / "grid.txt") << "batch_size = 8\ndropout = 0.2, 0.3\nhidden_dim = 6\n"
                                       "joint_dim = 8\nl2_strength = 0.02\n";
  const std::vector<std::string> args = {"gridsearch", "--grid", (root_ / "grid.txt").string(),
                                         "--data", (data / "manifest.txt").string(), "--out",
                                         out.string(), "--config", (root_ / "config.txt").string()};
  CliRun first = run(args);
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_TRUE(fs::exists(out / "best_model.json"));
  const std::string table = slurp(out / "grid.tsv");
  const auto stamp = fs::last_write_time(out / "cells" / "cell-0000" / "model.json");
  CliRun second = run(args);
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_EQ(slurp(out / "grid.tsv"), table);
  EXPECT_EQ(fs::last_write_time(out / "cells" / "cell-0000" / "model.json"), stamp);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"train", "--out", (root_ / "x").string()}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);

  CliRun missing = run({"train", "--data", (root_ / "nope" / "manifest.txt").string(), "--out",
                     (root_ / "x").string()});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);

  std::ofstream(root_ / "bad_config.txt") << "batch_size = 7\n";
  ASSERT_EQ(run({"synth", "--spec", (root_ / "spec.txt").string(), "--out",
                 (root_ / "data_bad").string()})
                .code,
            0);
  EXPECT_EQ(run({"train", "--config", (root_ / "bad_config.txt").string(), "--data",
                 (root_ / "data_bad" / "manifest.txt").string(), "--out", (root_ / "x").string()})
                .code,
            2);
  EXPECT_EQ(run({"score", "--predictions", (root_ / "nope.tsv").string(), "--gold",
                 (root_ / "nope.gold").string()})
                .code,
            2);
}

TEST_F(CliTest, DebugRerankWritesTraces) {
  const fs::path data = root_ / "data_debug", model = root_ / "model_debug";
  ASSERT_EQ(run({"synth", "--spec", (root_ / "spec.txt").string(), "--out", data.string()}).code, 0);
  ASSERT_EQ(run({"train", "--config", (root_ / "config.txt").string(), "--data",
                 (data / "manifest.txt").string(), "--out", model.string()})
                .code,
            0);
  CliRun rr = run({"rerank", "--model", (model / "model.json").string(), "--queries",
                (data / "test.jsonl").string(), "--vectors", (data / "vectors.txt").string(),
                "--out", (root_ / "pred_debug.tsv").string(), "--debug"});
  ASSERT_EQ(rr.code, 0) << rr.err;
  EXPECT_NE(rr.err.find("trace "), std::string::npos);
  EXPECT_NE(rr.err.find("  f:"), std::string::npos);

  CliRun no_vectors = run({"rerank", "--model", (model / "model.json").string(), "--queries",
                        (data / "test.jsonl").string(), "--out",
                        (root_ / "pred_nv.tsv").string()});
  EXPECT_EQ(no_vectors.code, 2);
}
