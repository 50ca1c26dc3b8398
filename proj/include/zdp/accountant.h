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

#ifndef ZDP_ACCOUNTANT_H_
#define ZDP_ACCOUNTANT_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "zdp/ctensor.h"
#include "zdp/error.h"
#include "zdp/mechanism.h"
#include "zdp/rng.h"

namespace zdp {

struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 1e-5;
};

inline void Validate(const PrivacyParams& p) {
  if (!(p.epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw DomainError("delta out of range");
}

// Phi(x) = erfc(-x / sqrt 2) / 2. glibc's erfc is accurate to about one ulp,
// which keeps the relative error of Phi below 1e-14 on |x| <= 8.
inline double StandardNormalCdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Tight delta(eps) of the Gaussian mechanism:
//   Phi(Delta/2sigma - eps sigma/Delta) - e^eps Phi(-Delta/2sigma - eps sigma/Delta).
inline double DeltaOfEpsilon(double sensitivity, double sigma, double epsilon) {
  if (!(sensitivity > 0.0) || !(sigma > 0.0)) {
    throw DomainError("sensitivity and sigma must be positive");
  }
  if (!(epsilon >= 0.0)) throw DomainError("epsilon must be >= 0");
  if (std::isinf(epsilon)) return 0.0;
  const double a = sensitivity / (2.0 * sigma);
  const double b = epsilon * sigma / sensitivity;
  const double head = StandardNormalCdf(a - b);
  const double tail_cdf = StandardNormalCdf(-a - b);
  const double tail = tail_cdf > 0.0 ? std::exp(epsilon + std::log(tail_cdf)) : 0.0;
  return std::max(0.0, head - tail);
}

// Smallest sigma with DeltaOfEpsilon(sensitivity, sigma, eps) <= delta, found
// by bisection on log sigma. The bracket starts at [1e-3, 1e3] * sensitivity
// and widens geometrically; bisection runs to floating-point resolution.
inline double CalibrateSigma(double sensitivity, double epsilon, double delta) {
  if (!(sensitivity > 0.0)) throw DomainError("sensitivity must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta out of range");
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  auto over = [&](double s) { return DeltaOfEpsilon(sensitivity, s, epsilon) > delta; };
  double lo = 1e-3 * sensitivity;
  double hi = 1e3 * sensitivity;
  while (over(hi)) {
    lo = hi;
    hi *= 10.0;
    if (!std::isfinite(hi)) throw DomainError("delta unattainable");
  }
  while (!over(lo)) {
    hi = lo;
    lo /= 10.0;
    if (lo == 0.0) return hi;
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    (over(mid) ? lo : hi) = mid;
  }
  return hi;
}

// Order-alpha Renyi bound of the Gaussian mechanism: alpha Delta^2 / 2 sigma^2.
inline double RdpGaussian(double alpha, double sensitivity, double sigma) {
  if (!(alpha > 1.0)) throw DomainError("renyi order must exceed 1");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  return alpha * sensitivity * sensitivity / (2.0 * sigma * sigma);
}

namespace internal {

inline double LogAddExp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline bool IsInteger(double x) { return std::floor(x) == x; }

}  // namespace internal

// Poisson-subsampled Gaussian with sensitivity 1 at integer order alpha:
//   1/(alpha-1) log sum_k C(alpha,k) (1-q)^(alpha-k) q^k exp((k^2-k) / 2 sigma^2),
// evaluated in log space.
inline double RdpSubsampledGaussian(double alpha, double q, double sigma) {
  if (!(alpha >= 2.0) || !internal::IsInteger(alpha)) {
    throw DomainError("subsampled RDP needs an integer order >= 2");
  }
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("sampling rate must be in (0, 1]");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  const auto n = static_cast<std::int64_t>(alpha);
  const double log_q = std::log(q);
  const double log_1mq = q == 1.0 ? -std::numeric_limits<double>::infinity() : std::log1p(-q);
  const double log_fact_n = std::lgamma(static_cast<double>(n) + 1.0);
  double acc = -std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    const double rest = static_cast<double>(n - k);
    if (rest > 0 && q == 1.0) continue;
    const double log_binom = k == 0 || k == n
                                 ? 0.0
                                 : log_fact_n - std::lgamma(kd + 1.0) - std::lgamma(rest + 1.0);
    const double term = log_binom + (rest > 0 ? rest * log_1mq : 0.0) +
                        (k > 0 ? kd * log_q : 0.0) +
                        (kd * kd - kd) / (2.0 * sigma * sigma);
    acc = internal::LogAddExp(acc, term);
  }
  return std::max(0.0, acc / (alpha - 1.0));
}

// Integers 2..256 plus 1.25, 1.5, 1.75. Fractional orders only carry finite
// values on full-batch Gaussian curves.
inline std::vector<double> DefaultAlphaGrid() {
  std::vector<double> grid = {1.25, 1.5, 1.75};
  for (int a = 2; a <= 256; ++a) grid.push_back(a);
  return grid;
}

struct RdpCurve {
  std::vector<double> alphas;
  std::vector<double> rhos;
  // rho(alpha) = coefficient * alpha holds exactly (full-batch Gaussian and
  // sums of them); lets the conversion optimise over continuous alpha.
  std::optional<double> gaussian_coefficient;
};

inline RdpCurve GaussianCurve(double sensitivity, double sigma,
                              std::span<const double> grid) {
  RdpCurve c;
  c.alphas.assign(grid.begin(), grid.end());
  for (double a : grid) c.rhos.push_back(RdpGaussian(a, sensitivity, sigma));
  c.gaussian_coefficient = sensitivity * sensitivity / (2.0 * sigma * sigma);
  return c;
}

// One step at sampling rate q. q == 1 is the plain Gaussian curve.
inline RdpCurve SubsampledGaussianCurve(double q, double sigma,
                                        std::span<const double> grid) {
  if (q == 1.0) return GaussianCurve(1.0, sigma, grid);
  RdpCurve c;
  c.alphas.assign(grid.begin(), grid.end());
  for (double a : grid) {
    c.rhos.push_back(internal::IsInteger(a) && a >= 2.0
                         ? RdpSubsampledGaussian(a, q, sigma)
                         : std::numeric_limits<double>::infinity());
  }
  return c;
}

inline RdpCurve ScaleCurve(const RdpCurve& c, double factor) {
  RdpCurve out = c;
  for (double& r : out.rhos) r *= factor;
  if (out.gaussian_coefficient) *out.gaussian_coefficient *= factor;
  return out;
}

// Pointwise sum; all curves must share one alpha grid.
inline RdpCurve Compose(std::span<const RdpCurve> curves) {
  if (curves.empty()) throw DomainError("nothing to compose");
  RdpCurve out = curves.front();
  for (std::size_t i = 1; i < curves.size(); ++i) {
    const RdpCurve& c = curves[i];
    if (c.alphas != out.alphas) throw DomainError("curves use different alpha grids");
    for (std::size_t j = 0; j < out.rhos.size(); ++j) out.rhos[j] += c.rhos[j];
    if (out.gaussian_coefficient && c.gaussian_coefficient) {
      *out.gaussian_coefficient += *c.gaussian_coefficient;
    } else {
      out.gaussian_coefficient.reset();
    }
  }
  return out;
}

struct DpConversion {
  double epsilon = 0.0;
  double best_alpha = 0.0;
};

// eps = min_alpha rho(alpha) + log(1/delta) / (alpha - 1).
inline DpConversion RdpToDp(const RdpCurve& curve, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta out of range");
  if (curve.alphas.empty() || curve.alphas.size() != curve.rhos.size()) {
    throw DomainError("empty RDP curve");
  }
  const double log_inv_delta = -std::log(delta);
  DpConversion best{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < curve.alphas.size(); ++i) {
    const double eps = curve.rhos[i] + log_inv_delta / (curve.alphas[i] - 1.0);
    if (eps < best.epsilon) best = {eps, curve.alphas[i]};
  }
  if (curve.gaussian_coefficient && *curve.gaussian_coefficient > 0.0) {
    const double c = *curve.gaussian_coefficient;
    const double alpha = 1.0 + std::sqrt(log_inv_delta / c);
    const double eps = c * alpha + log_inv_delta / (alpha - 1.0);
    if (eps < best.epsilon) best = {eps, alpha};
  }
  return best;
}

enum class SamplingMode { kPoisson, kUniform };

inline const char* SamplingModeName(SamplingMode m) {
  return m == SamplingMode::kPoisson ? "poisson" : "uniform";
}

// delta = n^-1.1, the dataset-size rule.
inline double DeltaForDatasetSize(std::size_t n) {
  if (n == 0) throw DomainError("dataset is empty");
  return std::pow(static_cast<double>(n), -1.1);
}

struct StepRecord {
  double sigma = 1.0;
  double q = 1.0;
  std::uint64_t steps = 0;
};

struct PrivacyReport {
  double epsilon = 0.0;
  double delta = 0.0;
  double best_alpha = 0.0;
  std::uint64_t steps = 0;
  // Uniform sampling is accounted with the Poisson bound.
  bool approximate = false;
};

// Per-step (sigma, q) records with additive RDP composition. Single writer.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(double delta, SamplingMode mode = SamplingMode::kPoisson,
                         std::vector<double> grid = DefaultAlphaGrid())
      : delta_(delta), mode_(mode), grid_(std::move(grid)) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta out of range");
  }

  void Record(double sigma, double q, std::uint64_t steps = 1) {
    if (!(sigma > 0.0)) throw DomainError("ledger sigma must be positive");
    if (!(q > 0.0 && q <= 1.0)) throw DomainError("sampling rate must be in (0, 1]");
    if (!records_.empty() && records_.back().sigma == sigma && records_.back().q == q) {
      records_.back().steps += steps;
    } else {
      records_.push_back({sigma, q, steps});
    }
  }

  std::span<const StepRecord> records() const { return records_; }
  double delta() const { return delta_; }
  SamplingMode mode() const { return mode_; }
  std::span<const double> grid() const { return grid_; }

  std::uint64_t total_steps() const {
    std::uint64_t n = 0;
    for (const StepRecord& r : records_) n += r.steps;
    return n;
  }

  // Composed curve of all recorded steps.
  RdpCurve Curve() const {
    std::vector<RdpCurve> parts;
    for (const StepRecord& r : records_) {
      if (r.steps == 0) continue;
      parts.push_back(ScaleCurve(StepCurve(r.sigma, r.q), static_cast<double>(r.steps)));
    }
    if (parts.empty()) throw DomainError("ledger has no steps");
    return Compose(parts);
  }

  PrivacyReport Report() const {
    PrivacyReport rep;
    rep.delta = delta_;
    rep.steps = total_steps();
    rep.approximate = mode_ == SamplingMode::kUniform;
    if (rep.steps == 0) return rep;  // nothing released, eps = 0
    const DpConversion conv = RdpToDp(Curve(), delta_);
    rep.epsilon = conv.epsilon;
    rep.best_alpha = conv.best_alpha;
    return rep;
  }

  // Rows: one per step group, then one summary row.
  std::string ToCsv() const {
    std::ostringstream os;
    os.precision(17);
    os << "kind,sigma,q,steps,epsilon,delta,best_alpha\n";
    for (const StepRecord& r : records_) {
      os << "group," << r.sigma << ',' << r.q << ',' << r.steps << ",,,\n";
    }
    const PrivacyReport rep = Report();
    os << "summary,,," << rep.steps << ',' << rep.epsilon << ',' << rep.delta << ','
       << rep.best_alpha << '\n';
    return os.str();
  }

 private:
  const RdpCurve& StepCurve(double sigma, double q) const {
    auto key = std::make_pair(sigma, q);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(key, SubsampledGaussianCurve(q, sigma, grid_)).first;
    }
    return it->second;
  }

  double delta_;
  SamplingMode mode_;
  std::vector<double> grid_;
  std::vector<StepRecord> records_;
  mutable std::map<std::pair<double, double>, RdpCurve> cache_;
};

struct MonteCarloEstimate {
  double delta = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

namespace internal {

class MeanAccumulator {
 public:
  void Add(double v) {
    ++n_;
    sum_ += v;
    sum_sq_ += v * v;
  }
  MonteCarloEstimate Finish() const {
    MonteCarloEstimate e;
    e.samples = n_;
    const double n = static_cast<double>(n_);
    e.delta = sum_ / n;
    const double var = std::max(0.0, (sum_sq_ - n * e.delta * e.delta) / (n - 1.0));
    e.standard_error = std::sqrt(var / n);
    return e;
  }

 private:
  std::uint64_t n_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

inline double HockeyStickTerm(double epsilon, double privacy_loss) {
  return std::max(0.0, -std::expm1(epsilon - privacy_loss));
}

}  // namespace internal

// delta = E[max(0, 1 - e^(eps - Omega))] with the privacy loss
// Omega ~ N(Delta^2 / 2 sigma^2, Delta^2 / sigma^2).
inline MonteCarloEstimate MonteCarloDelta(double sensitivity, double sigma, double epsilon,
                                          std::uint64_t samples, Rng& rng) {
  if (samples < 100000) throw DomainError("Monte Carlo needs >= 1e5 samples");
  if (!(sensitivity > 0.0) || !(sigma > 0.0)) {
    throw DomainError("sensitivity and sigma must be positive");
  }
  const double ratio = sensitivity / sigma;
  const double mean = 0.5 * ratio * ratio;
  internal::MeanAccumulator acc;
  for (std::uint64_t i = 0; i < samples; i += 2) {
    const cplx pair = rng.StandardNormalPair();
    acc.Add(internal::HockeyStickTerm(epsilon, mean + ratio * pair.real()));
    if (i + 1 < samples) acc.Add(internal::HockeyStickTerm(epsilon, mean + ratio * pair.imag()));
  }
  return acc.Finish();
}

// End-to-end estimate on actual mechanism outputs: O = GaussianMechanism(f_d)
// and Omega = log p(O | f_d) - log p(O | f_d_prime) from the output density.
inline MonteCarloEstimate MonteCarloMechanismDelta(const CTensor& f_d,
                                                   const CTensor& f_d_prime, double sigma,
                                                   double epsilon, std::uint64_t samples,
                                                   Rng& rng) {
  if (samples < 100000) throw DomainError("Monte Carlo needs >= 1e5 samples");
  if (f_d.shape() != f_d_prime.shape()) throw DomainError("outputs differ in shape");
  const MechanismSpec spec{L2Norm(Sub(f_d, f_d_prime)), sigma};
  Validate(spec);
  // Each real coordinate has variance sigma^2.
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  internal::MeanAccumulator acc;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const CTensor out = GaussianMechanism(f_d, spec, rng);
    const double loss =
        (SquaredNorm(Sub(out, f_d_prime)) - SquaredNorm(Sub(out, f_d))) * inv_two_var;
    acc.Add(internal::HockeyStickTerm(epsilon, loss));
  }
  return acc.Finish();
}

}  // namespace zdp

#endif  // ZDP_ACCOUNTANT_H_
