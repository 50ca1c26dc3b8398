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

#ifndef ZDP_TOOLS_RUN_CONFIG_H_
#define ZDP_TOOLS_RUN_CONFIG_H_

// JSON run configuration. Schema (unknown keys are rejected everywhere):
//
// {
//   "dataset": {                      // exactly one of generator / train_path
//     "generator": "blobs" | "paired_prototypes" | "fourier",
//     "seed": 0,
//     "train_per_class": 1000, "test_per_class": 200,
//     "classes": 2, "dim": 8, "separation": 6.0,    // blobs
//     "noise_std": 0.1, "dim": 16,                  // paired_prototypes
//     "length": 64, "keep": 8,                      // fourier
//     "train_path": "train.zdpc", "test_path": "test.zdpc"
//   },
//   "architecture": {
//     "layers": [{"type": "dense", "units": 16, "activation": "cardioid"},
//                {"type": "conv2d", "out_channels": 4, "kernel": 3, "stride": 1},
//                {"type": "maxpool2"}, {"type": "flatten"}],
//     "head": "softmax_magnitude" | "magnitude_sigmoid",
//     "input_shape": [8],             // optional, else taken from the dataset
//     "num_classes": 2,               // optional, else taken from the dataset
//     "igaussian_sigma": 1.0, "modrelu_bias": 0.0
//   },
//   "train": {
//     "learning_rate": 0.1, "lr_decay_factor": 1.0, "lr_decay_every": 0,
//     "noise_multiplier": 1.0, "sampling_rate": 0.05, "clip_bound": 1.0,
//     "steps": 100, "sampling": "poisson" | "uniform", "seed": 0,
//     "delta": 1e-5 | "n^-1.1", "workers": 1
//   },
//   "output": {"metrics_csv": "...", "ledger_csv": "...", "checkpoint": "..."}
// }

#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "zdp/zdp.h"

namespace zdp::cli {

using nlohmann::json;

// Bad command line or config; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  std::string generator;  // empty when loading files
  std::uint64_t seed = 0;
  std::size_t train_per_class = 1000;
  std::size_t test_per_class = 200;
  std::size_t classes = 2;
  std::size_t dim = 8;
  double separation = 6.0;
  double noise_std = 0.1;
  std::size_t length = 64;
  std::size_t keep = 8;
  std::string train_path;
  std::string test_path;
};

struct OutputSpec {
  std::string metrics_csv;
  std::string ledger_csv;
  std::string checkpoint;
};

struct RunConfig {
  DatasetSpec dataset;
  Architecture architecture;
  bool explicit_input_shape = false;
  bool explicit_num_classes = false;
  TrainConfig train;
  bool delta_from_size = false;
  OutputSpec output;
  json raw;
};

namespace internal {

inline void RejectUnknown(const json& obj, const std::set<std::string>& allowed,
                          const std::string& where) {
  if (!obj.is_object()) throw UsageError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw UsageError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T Get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(where + "." + key + " has the wrong type");
  }
}

inline std::size_t GetCount(const json& obj, const char* key, std::size_t fallback,
                            const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw UsageError(where + "." + key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline DatasetSpec ParseDataset(const json& j) {
  const std::string w = "dataset";
  RejectUnknown(j, {"generator", "seed", "train_per_class", "test_per_class", "classes", "dim",
                    "separation", "noise_std", "length", "keep", "train_path", "test_path"},
                w);
  DatasetSpec d;
  d.generator = Get<std::string>(j, "generator", "", w);
  d.train_path = Get<std::string>(j, "train_path", "", w);
  d.test_path = Get<std::string>(j, "test_path", "", w);
  if (d.generator.empty() == d.train_path.empty()) {
    throw UsageError("dataset needs exactly one of generator or train_path");
  }
  if (!d.generator.empty() && d.generator != "blobs" && d.generator != "paired_prototypes" &&
      d.generator != "fourier") {
    throw UsageError("unknown dataset generator '" + d.generator + "'");
  }
  d.seed = Get<std::uint64_t>(j, "seed", 0, w);
  d.train_per_class = GetCount(j, "train_per_class", d.train_per_class, w);
  d.test_per_class = GetCount(j, "test_per_class", d.test_per_class, w);
  d.classes = GetCount(j, "classes", d.classes, w);
  d.dim = GetCount(j, "dim", d.generator == "paired_prototypes" ? 16 : d.dim, w);
  d.separation = Get<double>(j, "separation", d.separation, w);
  d.noise_std = Get<double>(j, "noise_std", d.noise_std, w);
  d.length = GetCount(j, "length", d.length, w);
  d.keep = GetCount(j, "keep", d.keep, w);
  return d;
}

inline LayerSpec ParseLayer(const json& j, std::size_t index) {
  const std::string w = "architecture.layers[" + std::to_string(index) + "]";
  RejectUnknown(j, {"type", "units", "out_channels", "kernel", "stride", "activation"}, w);
  LayerSpec l;
  const std::string type = Get<std::string>(j, "type", "", w);
  if (type == "dense") {
    l.type = LayerType::kDense;
  } else if (type == "conv2d") {
    l.type = LayerType::kConv2d;
  } else if (type == "maxpool2") {
    l.type = LayerType::kMaxPool2;
  } else if (type == "flatten") {
    l.type = LayerType::kFlatten;
  } else {
    throw UsageError(w + ".type must be dense, conv2d, maxpool2 or flatten");
  }
  l.units = GetCount(j, "units", 0, w);
  l.out_channels = GetCount(j, "out_channels", 0, w);
  l.kernel = GetCount(j, "kernel", 3, w);
  l.stride = GetCount(j, "stride", 1, w);
  if (j.contains("activation")) {
    const std::string name = Get<std::string>(j, "activation", "", w);
    auto kind = ParseActivation(name);
    if (!kind) throw UsageError(w + ": unknown activation '" + name + "'");
    l.activation = kind;
  }
  return l;
}

inline void ParseArchitecture(const json& j, RunConfig& rc) {
  const std::string w = "architecture";
  RejectUnknown(j, {"layers", "head", "input_shape", "num_classes", "igaussian_sigma",
                    "modrelu_bias"},
                w);
  Architecture& a = rc.architecture;
  if (!j.contains("layers") || !j.at("layers").is_array() || j.at("layers").empty()) {
    throw UsageError("architecture.layers must be a non-empty array");
  }
  for (std::size_t i = 0; i < j.at("layers").size(); ++i) {
    a.layers.push_back(ParseLayer(j.at("layers")[i], i));
  }
  const std::string head = Get<std::string>(j, "head", "softmax_magnitude", w);
  if (head == "softmax_magnitude") {
    a.head = HeadKind::kSoftmaxMagnitude;
  } else if (head == "magnitude_sigmoid") {
    a.head = HeadKind::kMagnitudeSigmoid;
  } else {
    throw UsageError("architecture.head must be softmax_magnitude or magnitude_sigmoid");
  }
  if (j.contains("input_shape")) {
    a.input_shape = Get<std::vector<std::size_t>>(j, "input_shape", {}, w);
    rc.explicit_input_shape = true;
  }
  if (j.contains("num_classes")) {
    a.num_classes = GetCount(j, "num_classes", 2, w);
    rc.explicit_num_classes = true;
  }
  a.activation_options.igaussian_sigma = Get<double>(j, "igaussian_sigma", 1.0, w);
  a.activation_options.modrelu_bias = Get<double>(j, "modrelu_bias", 0.0, w);
  if (!(a.activation_options.igaussian_sigma > 0.0)) {
    throw UsageError("architecture.igaussian_sigma must be positive");
  }
}

inline void ParseTrain(const json& j, RunConfig& rc) {
  const std::string w = "train";
  RejectUnknown(j, {"learning_rate", "lr_decay_factor", "lr_decay_every", "noise_multiplier",
                    "sampling_rate", "clip_bound", "steps", "sampling", "seed", "delta", "workers"},
                w);
  TrainConfig& t = rc.train;
  t.learning_rate = Get<double>(j, "learning_rate", t.learning_rate, w);
  t.lr_decay_factor = Get<double>(j, "lr_decay_factor", t.lr_decay_factor, w);
  t.lr_decay_every = GetCount(j, "lr_decay_every", t.lr_decay_every, w);
  t.noise_multiplier = Get<double>(j, "noise_multiplier", t.noise_multiplier, w);
  t.sampling_rate = Get<double>(j, "sampling_rate", t.sampling_rate, w);
  t.clip_bound = Get<double>(j, "clip_bound", t.clip_bound, w);
  t.steps = GetCount(j, "steps", t.steps, w);
  const std::string sampling = Get<std::string>(j, "sampling", "poisson", w);
  if (sampling == "poisson") {
    t.sampling = SamplingMode::kPoisson;
  } else if (sampling == "uniform") {
    t.sampling = SamplingMode::kUniform;
  } else {
    throw UsageError("train.sampling must be poisson or uniform");
  }
  t.seed = Get<std::uint64_t>(j, "seed", 0, w);
  t.workers = GetCount(j, "workers", 1, w);
  if (j.contains("delta")) {
    const json& d = j.at("delta");
    if (d.is_string()) {
      if (d.get<std::string>() != "n^-1.1") throw UsageError("train.delta must be a number or \"n^-1.1\"");
      rc.delta_from_size = true;
    } else if (d.is_number()) {
      t.delta = d.get<double>();
    } else {
      throw UsageError("train.delta must be a number or \"n^-1.1\"");
    }
  }
  try {
    Validate(t);
  } catch (const DomainError& e) {
    throw UsageError(std::string("train: ") + e.what());
  }
}

inline OutputSpec ParseOutput(const json& j) {
  const std::string w = "output";
  RejectUnknown(j, {"metrics_csv", "ledger_csv", "checkpoint"}, w);
  return {Get<std::string>(j, "metrics_csv", "", w), Get<std::string>(j, "ledger_csv", "", w),
          Get<std::string>(j, "checkpoint", "", w)};
}

}  // namespace internal

inline RunConfig ParseRunConfig(const json& j) {
  internal::RejectUnknown(j, {"dataset", "architecture", "train", "output"}, "config");
  RunConfig rc;
  rc.raw = j;
  if (!j.contains("architecture")) throw UsageError("config needs an architecture section");
  if (j.contains("dataset")) {
    rc.dataset = internal::ParseDataset(j.at("dataset"));
  } else {
    rc.dataset.generator.clear();
  }
  internal::ParseArchitecture(j.at("architecture"), rc);
  if (j.contains("train")) internal::ParseTrain(j.at("train"), rc);
  if (j.contains("output")) rc.output = internal::ParseOutput(j.at("output"));
  if (!j.contains("dataset") && !rc.explicit_input_shape) {
    throw UsageError("config needs a dataset section or architecture.input_shape");
  }
  return rc;
}

inline RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path + " is not valid JSON: " + e.what());
  }
  return ParseRunConfig(j);
}

inline DatasetSplit BuildDatasets(const DatasetSpec& d) {
  if (!d.train_path.empty()) {
    DatasetSplit s;
    s.train = LoadZdpc(d.train_path);
    s.test = d.test_path.empty() ? s.train : LoadZdpc(d.test_path);
    return s;
  }
  Rng rng(d.seed);
  if (d.generator == "blobs") {
    return GenComplexBlobsSplit(d.train_per_class, d.test_per_class, d.classes, d.dim,
                                d.separation, rng);
  }
  if (d.generator == "paired_prototypes") {
    DatasetSplit s;
    s.train = GenPairedPrototypes(d.train_per_class, d.noise_std, rng, d.dim);
    s.test = GenPairedPrototypes(d.test_per_class, d.noise_std, rng, d.dim);
    return s;
  }
  DatasetSplit s;
  s.train = GenFourierSignals(d.train_per_class, d.length, d.keep, rng);
  s.test = GenFourierSignals(d.test_per_class, d.length, d.keep, rng);
  return s;
}

// Fills in the input shape and class count from the data, and the
// n^-1.1 delta rule.
inline void BindToData(RunConfig& rc, const DatasetSplit& data) {
  if (!rc.explicit_input_shape) rc.architecture.input_shape = data.train.example_shape();
  if (rc.explicit_num_classes && rc.architecture.num_classes != data.train.num_classes) {
    throw UsageError("architecture.num_classes does not match the dataset");
  }
  rc.architecture.num_classes = data.train.num_classes;
  if (rc.delta_from_size) rc.train.delta = DeltaForDatasetSize(data.train.size());
}

}  // namespace zdp::cli

#endif  // ZDP_TOOLS_RUN_CONFIG_H_
