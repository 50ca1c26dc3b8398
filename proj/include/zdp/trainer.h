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

#ifndef ZDP_TRAINER_H_
#define ZDP_TRAINER_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "zdp/accountant.h"
#include "zdp/ctensor.h"
#include "zdp/data.h"
#include "zdp/error.h"
#include "zdp/mechanism.h"
#include "zdp/nn.h"
#include "zdp/rng.h"
#include "zdp/wirtinger.h"

namespace zdp {

// Hyperparameters of private SGD. noise_multiplier == 0 selects plain
// (non-private) SGD; pair it with an infinite clip bound for the baseline.
struct TrainConfig {
  double learning_rate = 0.1;
  // Stepwise schedule: multiply by lr_decay_factor every lr_decay_every
  // steps (0 keeps the rate constant).
  double lr_decay_factor = 1.0;
  std::uint64_t lr_decay_every = 0;
  double noise_multiplier = 1.0;
  double sampling_rate = 0.05;
  double clip_bound = 1.0;
  std::uint64_t steps = 100;
  SamplingMode sampling = SamplingMode::kPoisson;
  std::uint64_t seed = 0;
  double delta = 1e-5;
  std::size_t workers = 1;

  bool is_private() const { return noise_multiplier > 0.0; }
};

inline void Validate(const TrainConfig& c) {
  if (!(c.learning_rate >= 0.0)) throw DomainError("learning rate must be >= 0");
  if (!(c.lr_decay_factor > 0.0)) throw DomainError("lr decay factor must be positive");
  if (!(c.noise_multiplier >= 0.0)) throw DomainError("noise multiplier must be >= 0");
  if (!(c.sampling_rate > 0.0 && c.sampling_rate <= 1.0)) {
    throw DomainError("sampling rate must be in (0, 1]");
  }
  if (!(c.clip_bound > 0.0)) throw DomainError("clip bound must be positive");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw DomainError("delta out of range");
}

// The same config with noise and clipping switched off.
inline TrainConfig NonPrivate(TrainConfig c) {
  c.noise_multiplier = 0.0;
  c.clip_bound = std::numeric_limits<double>::infinity();
  return c;
}

inline double LearningRateAt(const TrainConfig& c, std::uint64_t step) {
  if (c.lr_decay_every == 0) return c.learning_rate;
  return c.learning_rate *
         std::pow(c.lr_decay_factor, static_cast<double>(step / c.lr_decay_every));
}

// Stream ids; the noise of step t never depends on how many lots were drawn.
inline constexpr std::uint64_t kInitStream = 0x1000;
inline constexpr std::uint64_t kLotStreamBase = 0x10000000ULL;
inline constexpr std::uint64_t kNoiseStreamBase = 0x20000000ULL;

// Poisson: each index independently with probability R. Uniform: exactly
// round(R N) distinct indices. Returned sorted.
inline std::vector<std::size_t> SampleLot(std::size_t n, double rate, SamplingMode mode, Rng& rng) {
  if (!(rate > 0.0 && rate <= 1.0)) throw DomainError("sampling rate must be in (0, 1]");
  std::vector<std::size_t> lot;
  if (mode == SamplingMode::kPoisson) {
    for (std::size_t i = 0; i < n; ++i) {
      if (rate == 1.0 || rng.Uniform() < rate) lot.push_back(i);
    }
    return lot;
  }
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  if (k == 0) throw DomainError("uniform lot size rounds to zero");
  // Partial Fisher-Yates.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + rng.UniformInt(n - i)]);
  }
  lot.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(lot.begin(), lot.end());
  return lot;
}

// Averaging denominator: the expected lot size under Poisson sampling, the
// realised size under uniform sampling.
inline double LotDenominator(const TrainConfig& c, std::size_t dataset_size, std::size_t lot_size) {
  if (c.sampling == SamplingMode::kUniform) return static_cast<double>(lot_size);
  return std::max(1.0, std::round(c.sampling_rate * static_cast<double>(dataset_size)));
}

struct SampleGradient {
  double loss = 0.0;
  ConjugateGradient grad;
};

inline SampleGradient PerSampleGradient(const Architecture& arch, std::span<const CTensor> params,
                                        const CTensor& input, int label) {
  SampleGradient out;
  out.grad = ValueAndGrad(
      [&](Tape& t, std::span<const Var> p) { return LossNode(t, arch, p, input, label); },
      params, &out.loss);
  return out;
}

// Observes the clipped per-sample norms of each step (debug instrumentation).
using ClipObserver = std::function<void(std::uint64_t step, std::span<const double> clipped_norms)>;

struct StepResult {
  double mean_loss = 0.0;
  std::size_t lot_size = 0;
};

// Per-sample gradients for `lot`, computed on up to `workers` threads. Slot i
// belongs to lot[i], so the result is independent of the worker count.
inline std::vector<SampleGradient> LotGradients(const Architecture& arch,
                                                std::span<const CTensor> params,
                                                const ComplexDataset& data,
                                                std::span<const std::size_t> lot,
                                                std::size_t workers) {
  std::vector<SampleGradient> out(lot.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < lot.size(); i += stride) {
      out[i] = PerSampleGradient(arch, params, data.examples[lot[i]], data.labels[lot[i]]);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, lot.size()));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  return out;
}

// theta <- theta - eta_t * PrivatizeLot(per-sample gradients of the lot).
// Appends (sigma, R, 1) to the ledger when the step is private.
inline StepResult TrainStep(const Architecture& arch, std::vector<CTensor>& params,
                            const ComplexDataset& data, std::span<const std::size_t> lot,
                            const TrainConfig& config, std::uint64_t step,
                            PrivacyLedger* ledger, const ClipObserver& observer = {}) {
  Validate(config);
  std::vector<SampleGradient> grads = LotGradients(arch, params, data, lot, config.workers);
  StepResult res;
  res.lot_size = lot.size();
  std::vector<ConjugateGradient> per_sample;
  per_sample.reserve(grads.size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i].loss)) {
      throw ContractError("non-finite loss at step " + std::to_string(step) + " on example " +
                          std::to_string(lot[i]));
    }
    res.mean_loss += grads[i].loss;
    per_sample.push_back(std::move(grads[i].grad));
  }
  if (!lot.empty()) res.mean_loss /= static_cast<double>(lot.size());
  if (observer) {
    std::vector<double> norms;
    for (const ConjugateGradient& g : per_sample) {
      norms.push_back(GlobalNorm(ClipConjugateGradient(g, config.clip_bound)));
    }
    observer(step, norms);
  }
  std::vector<Shape> shapes;
  for (const CTensor& p : params) shapes.push_back(p.shape());
  Rng noise_rng = Rng::Stream(config.seed, kNoiseStreamBase + step);
  const ConjugateGradient update =
      PrivatizeLot(shapes, per_sample, config.clip_bound, config.noise_multiplier,
                   LotDenominator(config, data.size(), lot.size()), noise_rng);
  const double eta = LearningRateAt(config, step);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto dst = params[p].mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= eta * update[p][i];
  }
  if (config.is_private() && ledger) ledger->Record(config.noise_multiplier, config.sampling_rate);
  return res;
}

// Area under the ROC curve via the rank statistic; ties get average ranks.
inline double RocAuc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DomainError("scores and labels differ in count");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw DomainError("ROC-AUC needs both classes present");
  const double p = static_cast<double>(positives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

inline double Accuracy(std::span<const std::size_t> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size() || labels.empty()) {
    throw DomainError("accuracy needs equal, non-empty inputs");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hit += predicted[i] == static_cast<std::size_t>(labels[i]);
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

struct Metrics {
  double accuracy = 0.0;
  std::optional<double> roc_auc;  // binary tasks
};

inline Metrics Evaluate(const Architecture& arch, std::span<const CTensor> params,
                        const ComplexDataset& data) {
  Validate(data);
  std::vector<std::size_t> predicted;
  std::vector<double> scores;
  for (const CTensor& x : data.examples) {
    const Prediction p = Predict(arch, params, x);
    predicted.push_back(p.label);
    if (data.num_classes == 2) scores.push_back(p.probabilities[1]);
  }
  Metrics m;
  m.accuracy = Accuracy(predicted, data.labels);
  if (data.num_classes == 2) m.roc_auc = RocAuc(scores, data.labels);
  return m;
}

struct StepLog {
  std::uint64_t step = 0;
  double loss = 0.0;
  std::size_t lot_size = 0;
  // +inf for non-private training.
  double eps_so_far = 0.0;
};

struct TrainReport {
  std::vector<double> losses;
  std::vector<std::size_t> lot_sizes;
  std::vector<CTensor> params;
  Metrics metrics;
  // Absent for non-private training (eps = infinity).
  std::optional<PrivacyReport> privacy;
  std::vector<StepRecord> ledger;
};

struct TrainCallbacks {
  std::function<void(const StepLog&)> on_step;
  ClipObserver on_clip;
};

inline TrainReport Train(const ComplexDataset& train, const ComplexDataset& test,
                         const Architecture& arch, const TrainConfig& config,
                         const TrainCallbacks& callbacks = {}) {
  Validate(config);
  Validate(train);
  if (train.example_shape() != arch.input_shape) {
    throw DomainError("dataset shape " + ShapeString(train.example_shape()) +
                      " does not match architecture input " + ShapeString(arch.input_shape));
  }
  TrainReport rep;
  Rng init_rng = Rng::Stream(config.seed, kInitStream);
  rep.params = InitParams(arch, init_rng);
  PrivacyLedger ledger(config.delta, config.sampling);
  for (std::uint64_t t = 0; t < config.steps; ++t) {
    Rng lot_rng = Rng::Stream(config.seed, kLotStreamBase + t);
    const std::vector<std::size_t> lot =
        SampleLot(train.size(), config.sampling_rate, config.sampling, lot_rng);
    const StepResult s = TrainStep(arch, rep.params, train, lot, config, t, &ledger, callbacks.on_clip);
    rep.losses.push_back(s.mean_loss);
    rep.lot_sizes.push_back(s.lot_size);
    if (callbacks.on_step) {
      const double eps = config.is_private() ? ledger.Report().epsilon
                                             : std::numeric_limits<double>::infinity();
      callbacks.on_step({t, s.mean_loss, s.lot_size, eps});
    }
  }
  rep.metrics = Evaluate(arch, rep.params, test);
  if (config.is_private()) rep.privacy = ledger.Report();
  rep.ledger.assign(ledger.records().begin(), ledger.records().end());
  return rep;
}

}  // namespace zdp

#endif  // ZDP_TRAINER_H_
