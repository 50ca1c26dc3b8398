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

#ifndef ZDP_MECHANISM_H_
#define ZDP_MECHANISM_H_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "zdp/ctensor.h"
#include "zdp/error.h"
#include "zdp/rng.h"
#include "zdp/wirtinger.h"

namespace zdp {

struct ClipSpec {
  double bound = 1.0;
};

// Sensitivity and noise scale of the complex Gaussian mechanism.
//
// `sigma` is the standard deviation of each real coordinate of the noise:
// the mechanism adds circular noise with E|xi_k|^2 = 2 sigma^2 (re and im
// each N(0, sigma^2)). Under this scale the privacy loss of a Delta-shift is
// N(Delta^2 / 2 sigma^2, Delta^2 / sigma^2), which is what the accountant's
// delta(eps) and alpha Delta^2 / (2 sigma^2) formulas assume.
struct MechanismSpec {
  double sensitivity = 1.0;
  double sigma = 1.0;
};

// E|xi|^2 of the circular noise the mechanism draws for a noise scale sigma.
inline double MechanismNoiseVariance(double sigma) { return 2.0 * sigma * sigma; }

inline void Validate(const ClipSpec& c) {
  if (!(c.bound > 0.0)) throw DomainError("clip bound must be positive");
}

inline void Validate(const MechanismSpec& m) {
  if (!(m.sensitivity > 0.0)) throw DomainError("sensitivity must be positive");
  if (!(m.sigma > 0.0)) throw DomainError("noise scale must be positive");
}

// Hermitian norm over all parameter tensors.
inline double GlobalNorm(std::span<const CTensor> g) {
  double s = 0.0;
  for (const CTensor& t : g) s += SquaredNorm(t);
  return std::sqrt(s);
}

// g / max(1, ||g|| / B). The zero gradient passes through untouched.
inline ConjugateGradient ClipConjugateGradient(std::span<const CTensor> g, double bound) {
  Validate(ClipSpec{bound});
  const double factor = 1.0 / std::max(1.0, GlobalNorm(g) / bound);
  ConjugateGradient out(g.begin(), g.end());
  if (factor == 1.0) return out;
  for (CTensor& t : out) {
    for (cplx& z : t.mutable_data()) z *= factor;
  }
  return out;
}

inline CTensor GaussianMechanism(const CTensor& value, const MechanismSpec& spec, Rng& rng) {
  Validate(spec);
  return Add(value, SampleCircularGaussian(value.shape(), MechanismNoiseVariance(spec.sigma), rng));
}

// (sum_i clip(g_i, B) + xi) / denominator with xi at noise scale
// noise_multiplier * B. Terms are reduced in the order given; noise_multiplier
// 0 skips the draw (non-private reference).
inline ConjugateGradient PrivatizeLot(std::span<const Shape> shapes,
                                      std::span<const ConjugateGradient> per_sample,
                                      double bound, double noise_multiplier,
                                      double denominator, Rng& rng) {
  Validate(ClipSpec{bound});
  if (!(denominator > 0.0)) throw DomainError("lot denominator must be positive");
  if (noise_multiplier < 0.0) throw DomainError("noise multiplier must be >= 0");
  ConjugateGradient sum;
  for (const Shape& s : shapes) sum.emplace_back(s);
  for (const ConjugateGradient& g : per_sample) {
    if (g.size() != shapes.size()) throw DomainError("gradient arity mismatch");
    ConjugateGradient c = ClipConjugateGradient(g, bound);
    for (std::size_t p = 0; p < c.size(); ++p) {
      if (c[p].shape() != shapes[p]) throw DomainError("gradient shape mismatch");
      auto dst = sum[p].mutable_data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c[p][i];
    }
  }
  const MechanismSpec spec{bound, noise_multiplier * bound};
  for (CTensor& t : sum) {
    if (noise_multiplier > 0.0) t = GaussianMechanism(t, spec, rng);
    for (cplx& z : t.mutable_data()) z /= denominator;
  }
  return sum;
}

}  // namespace zdp

#endif  // ZDP_MECHANISM_H_
