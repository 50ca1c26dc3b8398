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

#ifndef ZDP_TOOLS_COMMANDS_H_
#define ZDP_TOOLS_COMMANDS_H_

// Subcommand bodies. Each takes parsed options plus output streams and
// returns the process exit code, so tests can call them directly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "run_config.h"
#include "zdp/zdp.h"

namespace zdp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct CommonOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0: no cap
  bool deterministic_output = false;
};

inline std::string Num(double v, int precision = 10) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

// ---- calibrate --------------------------------------------------------------

struct CalibrateOptions {
  double sensitivity = 1.0;
  double epsilon = 1.0;
  double delta = 1e-5;
};

inline int CmdCalibrate(const CalibrateOptions& o, std::ostream& out) {
  const double sigma = CalibrateSigma(o.sensitivity, o.epsilon, o.delta);
  out << "sigma=" << Num(sigma, 17) << '\n';
  return kExitOk;
}

// ---- account ----------------------------------------------------------------

struct AccountOptions {
  double sigma = 1.0;
  double sampling_rate = 1.0;
  std::uint64_t steps = 1;
  double delta = 1e-5;
  SamplingMode mode = SamplingMode::kPoisson;
  // Privacy profile of one release instead: delta(eps) at this sensitivity.
  bool profile = false;
  double sensitivity = 1.0;
  double epsilon = 1.0;
};

inline int CmdAccount(const AccountOptions& o, std::ostream& out) {
  if (o.profile) {
    const double delta = DeltaOfEpsilon(o.sensitivity, o.sigma, o.epsilon);
    out << "delta=" << Num(delta, 17) << '\n';
    return kExitOk;
  }
  PrivacyLedger ledger(o.delta, o.mode);
  if (o.steps > 0) ledger.Record(o.sigma, o.sampling_rate, o.steps);
  const PrivacyReport rep = ledger.Report();
  out << "epsilon=" << Num(rep.epsilon) << '\n';
  out << "delta=" << Num(rep.delta) << '\n';
  out << "best_alpha=" << Num(rep.best_alpha) << '\n';
  out << "steps=" << rep.steps << '\n';
  if (rep.approximate) out << "note: approximate under uniform sampling\n";
  return kExitOk;
}

// ---- audit-noise ------------------------------------------------------------

// Draws `shape` circular samples of total variance `variance`.
using NoiseSampler = std::function<CTensor(const Shape& shape, double variance, Rng& rng)>;

struct AuditNoiseOptions {
  double sigma = 1.0;  // total variance is sigma^2
  std::uint64_t n = 1000000;
  NoiseSampler sampler;
};

inline int CmdAuditNoise(const AuditNoiseOptions& o, const CommonOptions& common,
                         std::ostream& out) {
  if (!(o.sigma > 0.0)) throw DomainError("sigma must be positive");
  if (o.n < 2) throw DomainError("audit needs at least two samples");
  Rng rng(common.seed);
  const double variance = o.sigma * o.sigma;
  const NoiseSampler sampler = o.sampler ? o.sampler : NoiseSampler(SampleCircularGaussian);
  const CTensor samples = sampler({static_cast<std::size_t>(o.n)}, variance, rng);
  const AuditReport rep = AuditCircularity(samples.data(), variance);
  out << "check,value,expected,standard_error,result\n";
  for (const AuditCheck& c : rep.checks) {
    out << c.name << ',' << Num(c.value) << ',' << Num(c.expected) << ','
        << Num(c.standard_error) << ',' << (c.pass ? "PASS" : "FAIL") << '\n';
  }
  if (!rep.pass()) {
    out << "FAIL: noise is not circular N_C(0, " << Num(variance) << ")";
    for (const AuditCheck& c : rep.checks) {
      if (!c.pass) {
        out << "; " << c.name << " off by "
            << Num(std::abs(c.value - c.expected) / std::max(c.standard_error, 1e-300), 4)
            << " SE";
      }
    }
    out << '\n';
    return kExitFailure;
  }
  out << "PASS\n";
  return kExitOk;
}

// ---- audit-delta ------------------------------------------------------------

struct AuditDeltaOptions {
  double sensitivity = 1.0;
  double sigma = 1.0;
  double epsilon = 0.0;
  std::uint64_t n = 10000000;
  // 0: scalar privacy-loss sampling; d > 0: full mechanism outputs in C^d.
  std::size_t complex_dim = 0;
  double tolerance_se = 3.0;
};

// |estimate - analytic| within k standard errors. The estimate moves in
// steps of 1/n, so the standard error is floored there: with no hits at all
// the sample SE is 0 although delta below ~1/n is simply unresolved.
inline double EffectiveStandardError(const MonteCarloEstimate& mc) {
  return std::max(mc.standard_error, 1.0 / static_cast<double>(mc.samples));
}

inline bool WithinStandardErrors(const MonteCarloEstimate& mc, double analytic, double k) {
  return std::abs(mc.delta - analytic) <= k * EffectiveStandardError(mc);
}

inline int CmdAuditDelta(const AuditDeltaOptions& o, const CommonOptions& common,
                         std::ostream& out) {
  Rng rng(common.seed);
  const double analytic = DeltaOfEpsilon(o.sensitivity, o.sigma, o.epsilon);
  MonteCarloEstimate mc;
  if (o.complex_dim == 0) {
    mc = MonteCarloDelta(o.sensitivity, o.sigma, o.epsilon, o.n, rng);
  } else {
    // Neighbouring outputs at distance exactly Delta along a random direction.
    const Shape shape{o.complex_dim};
    const CTensor dir = SampleCircularGaussian(shape, 1.0, rng);
    const CTensor f_d = SampleCircularGaussian(shape, 1.0, rng);
    const CTensor f_d_prime = Add(f_d, Scale(dir, o.sensitivity / L2Norm(dir)));
    mc = MonteCarloMechanismDelta(f_d, f_d_prime, o.sigma, o.epsilon, o.n, rng);
  }
  const bool pass = WithinStandardErrors(mc, analytic, o.tolerance_se);
  out << "delta_analytic=" << Num(analytic) << '\n';
  out << "delta_monte_carlo=" << Num(mc.delta) << '\n';
  out << "standard_error=" << Num(EffectiveStandardError(mc)) << '\n';
  out << "samples=" << mc.samples << '\n';
  out << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitFailure;
}

// ---- gradcheck --------------------------------------------------------------

struct GradcheckOptions {
  std::string arch_path;
  std::size_t seeds = 10;
  double tolerance = 1e-5;
  double step = 1e-4;
  // Base points closer than this to an activation kink are resampled.
  double kink_margin = 1e-3;
  std::size_t max_attempts = 100;
};

struct GradcheckCase {
  std::vector<CTensor> params;
  CTensor input;
  std::size_t label = 0;
};

// Random parameters (biases included) and a random input/label.
inline GradcheckCase RandomGradcheckCase(const Architecture& arch, Rng& rng) {
  GradcheckCase c;
  c.params = InitParams(arch, rng);
  for (CTensor& p : c.params) {
    p = Add(p, SampleCircularGaussian(p.shape(), 0.1, rng));
  }
  c.input = SampleCircularGaussian(arch.input_shape, 1.0, rng);
  c.label = rng.UniformInt(arch.num_classes);
  return c;
}

inline ModelFn LossModel(const Architecture& arch, const CTensor& input, std::size_t label) {
  return [&arch, input, label](Tape& tape, std::span<const Var> params) {
    return LossNode(tape, arch, params, input, label);
  };
}

// |dL/dz-bar| against the real-gradient norm for L = z z-bar at z.
inline double ZzbarNormRatio(cplx z) {
  const ModelFn model = [](Tape&, std::span<const Var> p) { return ad::Mul(p[0], ad::Conj(p[0])); };
  const CTensor params[] = {CTensor::Scalar(z)};
  const double wirtinger = std::abs(ValueAndGrad(model, params)[0].item());
  // grad over (x, y) of x^2 + y^2.
  const double flat = std::hypot(2.0 * z.real(), 2.0 * z.imag());
  return flat / wirtinger;
}

inline int CmdGradcheck(const GradcheckOptions& o, const CommonOptions& common,
                        std::ostream& out) {
  RunConfig rc = LoadRunConfig(o.arch_path);
  if (!rc.explicit_input_shape) {
    if (rc.dataset.generator.empty() && rc.dataset.train_path.empty()) {
      throw UsageError("gradcheck needs architecture.input_shape or a dataset");
    }
    BindToData(rc, BuildDatasets(rc.dataset));
  }
  const Architecture& arch = rc.architecture;
  ParamLayout(arch);
  double worst = 0.0;
  double min_kink = std::numeric_limits<double>::infinity();
  std::size_t rejected = 0;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng = Rng::Stream(common.seed, s);
    GradcheckResult r;
    std::size_t attempt = 0;
    for (;; ++attempt) {
      if (attempt == o.max_attempts) {
        throw ContractError("could not find a base point away from activation kinks");
      }
      const GradcheckCase c = RandomGradcheckCase(arch, rng);
      r = Gradcheck(LossModel(arch, c.input, c.label), c.params, o.step);
      if (r.min_kink_distance >= o.kink_margin) break;
      ++rejected;
    }
    worst = std::max(worst, r.max_relative_error);
    min_kink = std::min(min_kink, r.min_kink_distance);
    out << "seed=" << s << " max_relative_error=" << Num(r.max_relative_error, 4) << '\n';
  }
  // Factor-2 regression on the scalar loss z z-bar.
  Rng zr = Rng::Stream(common.seed, 0xC0FFEE);
  const double ratio = ZzbarNormRatio(zr.StandardNormalPair());
  const bool pass = worst <= o.tolerance;
  out << "kink_rejections=" << rejected << '\n';
  out << "max_relative_error=" << Num(worst, 4) << '\n';
  out << "zzbar_norm_ratio=" << Num(ratio, 15) << '\n';
  out << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitFailure;
}

// ---- checkpoints ------------------------------------------------------------

// A checkpoint is a ZDPC file holding one example, the flattened parameters
// (class count 1), plus a JSON sidecar at <path>.json with the parameter
// layout, the run config and the privacy ledger.
inline void SaveCheckpoint(const std::string& path, const Architecture& arch,
                           std::span<const CTensor> params, const json& config,
                           const TrainReport& report) {
  std::vector<cplx> flat;
  json layout = json::array();
  const std::vector<ParamSlot> slots = ParamLayout(arch);
  for (std::size_t i = 0; i < params.size(); ++i) {
    layout.push_back({{"offset", flat.size()}, {"shape", params[i].shape()}});
    flat.insert(flat.end(), params[i].data().begin(), params[i].data().end());
  }
  const std::size_t total = flat.size();
  const CTensor packed({total}, std::move(flat));
  const int label = 0;
  WriteFileBytes(path, EncodeZdpc(std::span(&packed, 1), std::span(&label, 1), 1));
  json ledger = json::array();
  for (const StepRecord& r : report.ledger) {
    ledger.push_back({{"sigma", r.sigma}, {"q", r.q}, {"steps", r.steps}});
  }
  json side = {{"format", "zdp-checkpoint"},
               {"version", 1},
               {"params", layout},
               {"config", config},
               {"ledger", ledger}};
  if (report.privacy) {
    side["privacy"] = {{"epsilon", report.privacy->epsilon},
                       {"delta", report.privacy->delta},
                       {"best_alpha", report.privacy->best_alpha},
                       {"steps", report.privacy->steps}};
  } else {
    side["privacy"] = nullptr;
  }
  const std::string text = side.dump(2) + "\n";
  WriteFileBytes(path + ".json",
                 std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::vector<CTensor> LoadCheckpointParams(const std::string& path) {
  const DecodedZdpc d = DecodeZdpc(ReadFileBytes(path));
  const std::vector<std::uint8_t> side_bytes = ReadFileBytes(path + ".json");
  const json side = json::parse(side_bytes.begin(), side_bytes.end());
  if (d.examples.size() != 1) throw DomainError("checkpoint must hold one tensor");
  const CTensor& packed = d.examples.front();
  std::vector<CTensor> params;
  for (const json& slot : side.at("params")) {
    const std::size_t offset = slot.at("offset").get<std::size_t>();
    const Shape shape = slot.at("shape").get<Shape>();
    const std::size_t n = NumElements(shape);
    if (offset + n > packed.size()) throw DomainError("checkpoint layout exceeds data");
    params.emplace_back(shape, std::vector<cplx>(packed.data().begin() + offset,
                                                 packed.data().begin() + offset + n));
  }
  return params;
}

// ---- train ------------------------------------------------------------------

struct TrainOptions {
  std::string config_path;
  bool no_dp = false;
  bool seed_given = false;
};

inline void WriteText(const std::string& path, const std::string& text) {
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline int CmdTrain(const TrainOptions& o, const CommonOptions& common, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig rc = LoadRunConfig(o.config_path);
  if (rc.dataset.generator.empty() && rc.dataset.train_path.empty()) {
    throw UsageError("train needs a dataset section");
  }
  const DatasetSplit data = BuildDatasets(rc.dataset);
  BindToData(rc, data);
  TrainConfig cfg = rc.train;
  if (o.seed_given) cfg.seed = common.seed;
  if (common.workers > 0) cfg.workers = std::min(cfg.workers, common.workers);
  if (o.no_dp) cfg = NonPrivate(cfg);

  std::ostringstream csv;
  csv.precision(10);
  csv << "step,loss,lot_size,eps_so_far\n";
  TrainCallbacks cb;
  cb.on_step = [&](const StepLog& s) {
    csv << s.step << ',' << Num(s.loss) << ',' << s.lot_size << ',' << Num(s.eps_so_far) << '\n';
  };
  const TrainReport rep = Train(data.train, data.test, rc.architecture, cfg, cb);

  out << "train_examples=" << data.train.size() << '\n';
  out << "test_examples=" << data.test.size() << '\n';
  out << "steps=" << cfg.steps << '\n';
  out << "final_loss=" << (rep.losses.empty() ? "nan" : Num(rep.losses.back())) << '\n';
  out << "accuracy=" << Num(rep.metrics.accuracy) << '\n';
  if (rep.metrics.roc_auc) out << "roc_auc=" << Num(*rep.metrics.roc_auc) << '\n';
  if (rep.privacy) {
    out << "epsilon=" << Num(rep.privacy->epsilon) << '\n';
    out << "delta=" << Num(rep.privacy->delta) << '\n';
    out << "best_alpha=" << Num(rep.privacy->best_alpha) << '\n';
    if (rep.privacy->approximate) out << "note: approximate under uniform sampling\n";
  } else {
    out << "epsilon=inf\n";
  }
  if (!rc.output.metrics_csv.empty()) WriteText(rc.output.metrics_csv, csv.str());
  if (!rc.output.ledger_csv.empty() && cfg.is_private()) {
    PrivacyLedger ledger(cfg.delta, cfg.sampling);
    for (const StepRecord& r : rep.ledger) ledger.Record(r.sigma, r.q, r.steps);
    WriteText(rc.output.ledger_csv, ledger.ToCsv());
  }
  if (!rc.output.checkpoint.empty()) {
    json config = rc.raw;
    config["train"]["seed"] = cfg.seed;
    if (o.no_dp) config["train"]["noise_multiplier"] = 0.0;
    SaveCheckpoint(rc.output.checkpoint, rc.architecture, rep.params, config, rep);
  }
  if (!common.deterministic_output) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    out << "elapsed_seconds=" << Num(dt.count(), 4) << '\n';
  }
  return kExitOk;
}

// ---- bench-activations ------------------------------------------------------

struct BenchOptions {
  std::string config_path;
  std::size_t repeats = 5;
};

struct BenchRow {
  ActivationKind kind;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> values;
};

// Every layer that has an activation gets `kind`; nothing else changes.
inline Architecture WithActivation(Architecture arch, ActivationKind kind) {
  for (LayerSpec& l : arch.layers) {
    if (l.activation) l.activation = kind;
  }
  return arch;
}

inline std::vector<BenchRow> RunActivationBench(const RunConfig& rc, const DatasetSplit& data,
                                                std::size_t repeats, std::uint64_t seed,
                                                std::size_t workers) {
  if (repeats == 0) throw DomainError("repeats must be positive");
  std::vector<BenchRow> rows;
  for (ActivationKind kind : kAllActivations) {
    BenchRow row{kind, 0.0, 0.0, {}};
    const Architecture arch = WithActivation(rc.architecture, kind);
    for (std::size_t r = 0; r < repeats; ++r) {
      TrainConfig cfg = rc.train;
      cfg.seed = seed + r;  // same seed list for every activation
      if (workers > 0) cfg.workers = std::min(cfg.workers, workers);
      row.values.push_back(Train(data.train, data.test, arch, cfg).metrics.accuracy);
    }
    const double n = static_cast<double>(repeats);
    for (double v : row.values) row.mean += v / n;
    double ss = 0.0;
    for (double v : row.values) ss += (v - row.mean) * (v - row.mean);
    row.stddev = repeats > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const BenchRow& a, const BenchRow& b) { return a.mean < b.mean; });
  return rows;
}

inline int CmdBenchActivations(const BenchOptions& o, const CommonOptions& common,
                               std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig rc = LoadRunConfig(o.config_path);
  if (rc.dataset.generator.empty() && rc.dataset.train_path.empty()) {
    throw UsageError("bench-activations needs a dataset section");
  }
  const DatasetSplit data = BuildDatasets(rc.dataset);
  BindToData(rc, data);
  bool any = false;
  for (const LayerSpec& l : rc.architecture.layers) any = any || l.activation.has_value();
  if (!any) throw UsageError("bench-activations needs at least one layer with an activation");
  const std::vector<BenchRow> rows =
      RunActivationBench(rc, data, o.repeats, common.seed, common.workers);
  out << "activation accuracy (mean ± std over " << o.repeats << " seeds)\n";
  for (const BenchRow& r : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-32s %.4f ± %.4f\n",
                  std::string(ActivationName(r.kind)).c_str(), r.mean, r.stddev);
    out << line;
  }
  if (!common.deterministic_output) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    out << "elapsed_seconds=" << Num(dt.count(), 4) << '\n';
  }
  return kExitOk;
}

}  // namespace zdp::cli

#endif  // ZDP_TOOLS_COMMANDS_H_
