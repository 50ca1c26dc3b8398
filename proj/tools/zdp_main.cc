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

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.h"

namespace {

using namespace zdp::cli;

void AddCommon(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--seed", common.seed, "RNG seed (default 0)");
  cmd->add_option("--workers", common.workers, "Cap on worker threads (0: no cap)");
  cmd->add_flag("--deterministic-output", common.deterministic_output,
                "Suppress timing lines");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zdp: differential privacy for complex-valued models"};
  app.require_subcommand(1);
  CommonOptions common;

  CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "Smallest sigma meeting (eps, delta)");
  calibrate->add_option("--sensitivity", cal.sensitivity)->required();
  calibrate->add_option("--eps", cal.epsilon)->required();
  calibrate->add_option("--delta", cal.delta)->required();
  AddCommon(calibrate, common);

  AccountOptions acc;
  std::string mode = "poisson";
  auto* account = app.add_subcommand("account", "Privacy cost of subsampled Gaussian steps");
  account->add_option("--sigma", acc.sigma)->required();
  account->add_option("--sampling-rate", acc.sampling_rate);
  account->add_option("--steps", acc.steps);
  account->add_option("--delta", acc.delta);
  account->add_option("--mode", mode)->check(CLI::IsMember({"poisson", "uniform"}));
  account->add_flag("--profile", acc.profile, "Print delta(eps) of a single release");
  account->add_option("--sensitivity", acc.sensitivity);
  account->add_option("--eps", acc.epsilon);
  AddCommon(account, common);

  AuditNoiseOptions an;
  auto* audit_noise = app.add_subcommand("audit-noise", "Circularity audit of the noise sampler");
  audit_noise->add_option("--sigma", an.sigma);
  audit_noise->add_option("--n", an.n);
  AddCommon(audit_noise, common);

  AuditDeltaOptions ad;
  auto* audit_delta = app.add_subcommand("audit-delta", "Monte Carlo check of delta(eps)");
  audit_delta->add_option("--sensitivity", ad.sensitivity);
  audit_delta->add_option("--sigma", ad.sigma);
  audit_delta->add_option("--eps", ad.epsilon);
  audit_delta->add_option("--n", ad.n);
  audit_delta->add_option("--complex-dim", ad.complex_dim,
                          "Sample mechanism outputs in C^d (0: scalar privacy loss)");
  AddCommon(audit_delta, common);

  GradcheckOptions gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of backward");
  gradcheck->add_option("--arch", gc.arch_path, "JSON config with an architecture")->required();
  gradcheck->add_option("--seeds", gc.seeds);
  gradcheck->add_option("--tolerance", gc.tolerance);
  AddCommon(gradcheck, common);

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Private (or --no-dp) training run");
  train->add_option("--config", tr.config_path)->required();
  train->add_flag("--no-dp", tr.no_dp);
  AddCommon(train, common);

  BenchOptions be;
  auto* bench = app.add_subcommand("bench-activations", "Accuracy per activation over seeds");
  bench->add_option("--config", be.config_path)->required();
  bench->add_option("--repeats", be.repeats);
  AddCommon(bench, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  acc.mode = mode == "uniform" ? zdp::SamplingMode::kUniform : zdp::SamplingMode::kPoisson;
  tr.seed_given = train->count("--seed") > 0;

  try {
    if (*calibrate) return CmdCalibrate(cal, std::cout);
    if (*account) return CmdAccount(acc, std::cout);
    if (*audit_noise) return CmdAuditNoise(an, common, std::cout);
    if (*audit_delta) return CmdAuditDelta(ad, common, std::cout);
    if (*gradcheck) return CmdGradcheck(gc, common, std::cout);
    if (*train) return CmdTrain(tr, common, std::cout);
    if (*bench) return CmdBenchActivations(be, common, std::cout);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const zdp::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const zdp::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
