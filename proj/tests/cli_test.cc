// Copyright 2026 The zdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "commands.h"

namespace zdp::cli {
namespace {

namespace fs = std::filesystem;

const std::string kCli = ZDP_CLI_PATH;
const std::string kConfigs = ZDP_CONFIG_DIR;

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun Exec(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// key=value lines.
std::map<std::string, std::string> Fields(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos && line.find(' ') > eq) m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("zdp_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string File(const std::string& name) const { return (path_ / name).string(); }
  std::string Write(const std::string& name, const std::string& text) const {
    std::ofstream(File(name)) << text;
    return File(name);
  }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

TEST(RunConfigTest, ShippedConfigsParse) {
  for (const char* name : {"blobs.json", "gradcheck_smooth.json", "gradcheck_crelu.json",
                           "gradcheck_conv.json"}) {
    EXPECT_NO_THROW(LoadRunConfig(kConfigs + "/" + name)) << name;
  }
  const RunConfig rc = LoadRunConfig(kConfigs + "/blobs.json");
  EXPECT_EQ(rc.dataset.generator, "blobs");
  EXPECT_EQ(rc.train.noise_multiplier, 1.0);
  EXPECT_EQ(rc.train.clip_bound, 1.0);
  EXPECT_EQ(rc.train.sampling_rate, 0.05);
  EXPECT_EQ(rc.architecture.layers.size(), 2u);
}

TEST(RunConfigTest, UnknownKeysAreRejected) {
  const json base = ReadJson(kConfigs + "/blobs.json");
  for (const auto& [section, key] : std::vector<std::pair<std::string, std::string>>{
           {"", "extra"}, {"dataset", "sep"}, {"architecture", "depth"}, {"train", "lr"}}) {
    json j = base;
    (section.empty() ? j : j[section])[key] = 1;
    EXPECT_THROW(ParseRunConfig(j), UsageError) << section << "." << key;
  }
  json j = base;
  j["architecture"]["layers"][0]["units_"] = 3;
  EXPECT_THROW(ParseRunConfig(j), UsageError);
}

TEST(RunConfigTest, BadValuesAreRejected) {
  const json base = ReadJson(kConfigs + "/blobs.json");
  auto bad = [&](auto mutate) {
    json j = base;
    mutate(j);
    return j;
  };
  EXPECT_THROW(ParseRunConfig(bad([](json& j) { j["train"]["sampling"] = "bernoulli"; })), UsageError);
  EXPECT_THROW(ParseRunConfig(bad([](json& j) { j["architecture"]["layers"][0]["activation"] = "tanh"; })),
               UsageError);
  EXPECT_THROW(ParseRunConfig(bad([](json& j) { j["architecture"]["head"] = "softmax"; })), UsageError);
  EXPECT_THROW(ParseRunConfig(bad([](json& j) { j["train"]["steps"] = "ten"; })), UsageError);
  EXPECT_THROW(ParseRunConfig(bad([](json& j) { j["train"]["delta"] = "n^-2"; })), UsageError);
  const RunConfig rc = ParseRunConfig(bad([](json& j) { j["train"]["delta"] = "n^-1.1"; }));
  EXPECT_TRUE(rc.delta_from_size);
  EXPECT_THROW(LoadRunConfig("/nonexistent/config.json"), UsageError);
}

TEST(RunConfigTest, DeltaFromDatasetSize) {
  json j = ReadJson(kConfigs + "/blobs.json");
  j["train"]["delta"] = "n^-1.1";
  j["dataset"]["train_per_class"] = 50;
  j["dataset"]["test_per_class"] = 10;
  RunConfig rc = ParseRunConfig(j);
  const DatasetSplit data = BuildDatasets(rc.dataset);
  BindToData(rc, data);
  EXPECT_DOUBLE_EQ(rc.train.delta, std::pow(100.0, -1.1));
  EXPECT_EQ(rc.architecture.input_shape, Shape{8});
  EXPECT_EQ(rc.architecture.num_classes, 2u);
}

TEST(CalibrateCmdTest, RoundTripThroughAccountProfile) {
  std::ostringstream out;
  ASSERT_EQ(CmdCalibrate({1.0, 1.0, 1e-5}, out), kExitOk);
  const std::string sigma = Fields(out.str()).at("sigma");
  EXPECT_NEAR(std::stod(sigma), CalibrateSigma(1, 1, 1e-5), 1e-15);
  const CliRun r = Exec("account --profile --sensitivity 1 --eps 1 --sigma " + sigma);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_LE(std::stod(Fields(r.out).at("delta")), 1e-5);
}

TEST(CalibrateCmdTest, ScalingAndErrors) {
  const CliRun one = Exec("calibrate --sensitivity 1 --eps 1 --delta 1e-5");
  const CliRun two = Exec("calibrate --sensitivity 2 --eps 1 --delta 1e-5");
  ASSERT_EQ(one.code, 0);
  ASSERT_EQ(two.code, 0);
  const double s1 = std::stod(Fields(one.out).at("sigma"));
  EXPECT_NEAR(std::stod(Fields(two.out).at("sigma")), 2 * s1, 1e-9 * s1);
  const CliRun bad = Exec("calibrate --sensitivity 1 --eps 1 --delta 1.5");
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("delta out of range"), std::string::npos) << bad.out;
  EXPECT_EQ(Exec("calibrate --sensitivity 1 --eps 1").code, 2);
  EXPECT_EQ(Exec("no-such-command").code, 2);
}

TEST(AccountCmdTest, Examples) {
  const CliRun zero = Exec("account --sigma 1 --sampling-rate 0.1 --steps 0");
  ASSERT_EQ(zero.code, 0);
  EXPECT_EQ(std::stod(Fields(zero.out).at("epsilon")), 0.0);
  const CliRun full = Exec("account --sigma 1 --sampling-rate 1 --steps 1 --delta 1e-5");
  ASSERT_EQ(full.code, 0);
  EXPECT_NEAR(std::stod(Fields(full.out).at("epsilon")), 5.2986, 1e-4);
  EXPECT_NEAR(std::stod(Fields(full.out).at("best_alpha")), 5.80, 0.01);
  EXPECT_EQ(full.out.find("approximate"), std::string::npos);
  const CliRun uni = Exec("account --sigma 1 --sampling-rate 0.1 --steps 10 --mode uniform");
  ASSERT_EQ(uni.code, 0);
  EXPECT_NE(uni.out.find("note: approximate under uniform sampling"), std::string::npos);
  EXPECT_EQ(Exec("account --sigma 1 --mode bernoulli").code, 2);
  EXPECT_EQ(Exec("account --sigma 0").code, 2);
}

TEST(AuditCmdTest, NoisePassesAndNegativeControlFails) {
  std::ostringstream good;
  EXPECT_EQ(CmdAuditNoise({1.0, 1000000, {}}, {}, good), kExitOk) << good.str();
  EXPECT_NE(good.str().find("PASS"), std::string::npos);
  // Real part carries all the variance: circular in total power only.
  const NoiseSampler skewed = [](const Shape& s, double variance, Rng& rng) {
    CTensor t = SampleCircularGaussian(s, variance, rng);
    for (cplx& z : t.mutable_data()) z = cplx(z.real() * 1.05, z.imag() * 0.95);
    return t;
  };
  std::ostringstream bad;
  EXPECT_EQ(CmdAuditNoise({1.0, 1000000, skewed}, {}, bad), kExitFailure);
  EXPECT_NE(bad.str().find("FAIL: noise is not circular"), std::string::npos) << bad.str();
  EXPECT_NE(bad.str().find("SE"), std::string::npos);
  const NoiseSampler scaled = [](const Shape& s, double variance, Rng& rng) {
    return SampleCircularGaussian(s, 2 * variance, rng);
  };
  std::ostringstream bad2;
  EXPECT_EQ(CmdAuditNoise({1.0, 100000, scaled}, {}, bad2), kExitFailure);
  const CliRun r = Exec("audit-noise --sigma 1 --n 200000 --seed 3");
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(AuditCmdTest, DeltaMatchesAnalytic) {
  const CliRun r = Exec("audit-delta --sensitivity 1 --sigma 1 --eps 0 --n 10000000");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto f = Fields(r.out);
  EXPECT_NEAR(std::stod(f.at("delta_monte_carlo")), 0.3829, 1e-3);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  std::ostringstream out;
  AuditDeltaOptions o;
  o.sigma = 0.8;
  o.epsilon = 0.7;
  o.n = 300000;
  o.complex_dim = 2;
  EXPECT_EQ(CmdAuditDelta(o, {}, out), kExitOk) << out.str();
  EXPECT_EQ(Exec("audit-delta --n 10").code, 2);
}

TEST(GradcheckCmdTest, SmoothAndKinkedArchitecturesPass) {
  for (const char* name : {"gradcheck_smooth.json", "gradcheck_crelu.json"}) {
    const CliRun r = Exec(std::string("gradcheck --seeds 10 --arch ") + kConfigs + "/" + name);
    EXPECT_EQ(r.code, 0) << name << "\n" << r.out;
    const auto f = Fields(r.out);
    EXPECT_LE(std::stod(f.at("max_relative_error")), 1e-5);
    EXPECT_NEAR(std::stod(f.at("zzbar_norm_ratio")), 2.0, 1e-12);
  }
}

TEST(GradcheckCmdTest, ReportsKinkRejectionsForCRelu) {
  GradcheckOptions o;
  o.arch_path = kConfigs + "/gradcheck_crelu.json";
  o.seeds = 30;
  o.kink_margin = 0.05;  // wide enough that some base points are resampled
  std::ostringstream out;
  EXPECT_EQ(CmdGradcheck(o, {}, out), kExitOk) << out.str();
  EXPECT_GT(std::stoul(Fields(out.str()).at("kink_rejections")), 0u);
}

TEST(GradcheckCmdTest, ZzbarRatioIsTwo) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) EXPECT_NEAR(ZzbarNormRatio(rng.StandardNormalPair()), 2.0, 1e-12);
}

std::string SmallBlobsConfig(const TempDir& dir, bool outputs) {
  json j = ReadJson(kConfigs + "/blobs.json");
  j["dataset"]["train_per_class"] = 100;
  j["dataset"]["test_per_class"] = 20;
  j["train"]["sampling_rate"] = 0.1;
  j["train"]["steps"] = 5;
  if (outputs) {
    j["output"] = {{"metrics_csv", dir.File("metrics.csv")},
                   {"ledger_csv", dir.File("ledger.csv")},
                   {"checkpoint", dir.File("model.zdpc")}};
  }
  return dir.Write("config.json", j.dump());
}

TEST(TrainCmdTest, ShippedBlobsConfig) {
  const CliRun r = Exec("train --config " + kConfigs + "/blobs.json");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto f = Fields(r.out);
  EXPECT_GE(std::stod(f.at("accuracy")), 0.9);
  EXPECT_LE(std::stod(f.at("epsilon")), 3.0);
  EXPECT_EQ(f.at("train_examples"), "2000");
  EXPECT_EQ(f.at("test_examples"), "400");
  EXPECT_TRUE(f.count("roc_auc"));
}

TEST(TrainCmdTest, NoDpPrintsInfinity) {
  TempDir dir;
  const CliRun r = Exec("train --no-dp --config " + SmallBlobsConfig(dir, false));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(Fields(r.out).at("epsilon"), "inf");
  EXPECT_FALSE(Fields(r.out).count("best_alpha"));
}

TEST(TrainCmdTest, MissingOrBrokenConfigExitsTwo) {
  EXPECT_EQ(Exec("train --config /nonexistent/zdp.json").code, 2);
  TempDir dir;
  EXPECT_EQ(Exec("train --config " + dir.Write("bad.json", "{\"train\": {\"stepz\": 1}}")).code, 2);
  EXPECT_EQ(Exec("train --config " + dir.Write("broken.json", "{ not json")).code, 2);
  EXPECT_EQ(Exec("train").code, 2);
}

TEST(TrainCmdTest, OutputsAndCheckpointRoundTrip) {
  TempDir dir;
  const std::string cfg = SmallBlobsConfig(dir, true);
  std::ostringstream out;
  TrainOptions o;
  o.config_path = cfg;
  ASSERT_EQ(CmdTrain(o, {}, out), kExitOk);
  std::ifstream metrics(dir.File("metrics.csv"));
  std::string header;
  std::getline(metrics, header);
  EXPECT_EQ(header, "step,loss,lot_size,eps_so_far");
  int rows = 0;
  for (std::string line; std::getline(metrics, line);) ++rows;
  EXPECT_EQ(rows, 5);
  std::ifstream ledger(dir.File("ledger.csv"));
  std::getline(ledger, header);
  EXPECT_EQ(header, "kind,sigma,q,steps,epsilon,delta,best_alpha");

  // The checkpoint reproduces the trained parameters exactly.
  RunConfig rc = LoadRunConfig(cfg);
  const DatasetSplit data = BuildDatasets(rc.dataset);
  BindToData(rc, data);
  const TrainReport rep = Train(data.train, data.test, rc.architecture, rc.train);
  const std::vector<CTensor> loaded = LoadCheckpointParams(dir.File("model.zdpc"));
  ASSERT_EQ(loaded.size(), rep.params.size());
  for (std::size_t p = 0; p < loaded.size(); ++p) EXPECT_EQ(loaded[p], rep.params[p]);
  const json side = ReadJson(dir.File("model.zdpc.json"));
  EXPECT_EQ(side.at("format"), "zdp-checkpoint");
  EXPECT_EQ(side.at("privacy").at("epsilon").get<double>(), rep.privacy->epsilon);
  EXPECT_EQ(side.at("ledger").size(), rep.ledger.size());
}

TEST(TrainCmdTest, DeterministicGivenSeed) {
  TempDir dir;
  const std::string cfg = SmallBlobsConfig(dir, false);
  const CliRun a = Exec("train --deterministic-output --seed 4 --config " + cfg);
  const CliRun b = Exec("train --deterministic-output --seed 4 --workers 3 --config " + cfg);
  const CliRun c = Exec("train --deterministic-output --seed 5 --config " + cfg);
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(a.out.find("elapsed_seconds"), std::string::npos);
}

TEST(BenchCmdTest, TenSortedRowsWithSharedSeeds) {
  TempDir dir;
  const std::string cfg = SmallBlobsConfig(dir, false);
  const CliRun r = Exec("bench-activations --repeats 2 --deterministic-output --config " + cfg);
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  std::vector<double> means;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string name, pm;
    double mean, sd;
    ls >> name >> mean >> pm >> sd;
    ASSERT_TRUE(ls) << line;
    means.push_back(mean);
  }
  EXPECT_EQ(means.size(), 10u);
  EXPECT_TRUE(std::is_sorted(means.begin(), means.end()));
  EXPECT_EQ(r.out, Exec("bench-activations --repeats 2 --deterministic-output --config " + cfg).out);

  // Only the activation varies: with one activation the bench repeats Train
  // at seeds seed, seed + 1.
  RunConfig rc = LoadRunConfig(cfg);
  const DatasetSplit data = BuildDatasets(rc.dataset);
  BindToData(rc, data);
  const std::vector<BenchRow> rows = RunActivationBench(rc, data, 2, 7, 0);
  for (const BenchRow& row : rows) {
    ASSERT_EQ(row.values.size(), 2u);
    TrainConfig t = rc.train;
    t.seed = 8;
    EXPECT_EQ(row.values[1],
              Train(data.train, data.test, WithActivation(rc.architecture, row.kind), t).metrics.accuracy);
  }
}

}  // namespace
}  // namespace zdp::cli
