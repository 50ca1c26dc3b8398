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

#ifndef ZDP_ACTIVATIONS_H_
#define ZDP_ACTIVATIONS_H_

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "zdp/ctensor.h"
#include "zdp/error.h"

namespace zdp {

enum class ActivationKind {
  kSepSigmoid,
  kZRelu,
  kModRelu,
  kTrainableModRelu,
  kCardioid,
  kTrainableCardioidSingle,
  kTrainableCardioidPerFeature,
  kSigLog,
  kCRelu,
  kIGaussian,
};

inline constexpr std::array<ActivationKind, 10> kAllActivations = {
    ActivationKind::kSepSigmoid,
    ActivationKind::kZRelu,
    ActivationKind::kModRelu,
    ActivationKind::kTrainableModRelu,
    ActivationKind::kCardioid,
    ActivationKind::kTrainableCardioidSingle,
    ActivationKind::kTrainableCardioidPerFeature,
    ActivationKind::kSigLog,
    ActivationKind::kCRelu,
    ActivationKind::kIGaussian,
};

// How many trainable bias scalars an activation carries.
enum class BiasArity { kNone, kSingle, kPerFeature };

inline BiasArity ActivationBiasArity(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kTrainableModRelu:
    case ActivationKind::kTrainableCardioidPerFeature:
      return BiasArity::kPerFeature;
    case ActivationKind::kTrainableCardioidSingle:
      return BiasArity::kSingle;
    default:
      return BiasArity::kNone;
  }
}

inline std::string_view ActivationName(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kSepSigmoid: return "sep_sigmoid";
    case ActivationKind::kZRelu: return "zrelu";
    case ActivationKind::kModRelu: return "modrelu";
    case ActivationKind::kTrainableModRelu: return "trainable_modrelu";
    case ActivationKind::kCardioid: return "cardioid";
    case ActivationKind::kTrainableCardioidSingle: return "trainable_cardioid_single";
    case ActivationKind::kTrainableCardioidPerFeature: return "trainable_cardioid_per_feature";
    case ActivationKind::kSigLog: return "siglog";
    case ActivationKind::kCRelu: return "crelu";
    case ActivationKind::kIGaussian: return "igaussian";
  }
  return "?";
}

inline std::optional<ActivationKind> ParseActivation(std::string_view name) {
  for (ActivationKind k : kAllActivations) {
    if (ActivationName(k) == name) return k;
  }
  return std::nullopt;
}

// Fixed shape knobs. Trainable biases are passed per call.
struct ActivationOptions {
  double igaussian_sigma = 1.0;
  double modrelu_bias = 0.0;  // bias of the non-trainable ModReLU
};

// Division guard for phase-scaled activations.
inline constexpr double kPhaseEpsilon = 1e-12;

// (dw/dz, dw/dz-bar) at a point.
struct WirtingerPair {
  cplx dz;
  cplx dzbar;
};

struct ActivationEval {
  cplx value;
  WirtingerPair wrt_z;
  // Real derivative dw/db for the trainable bias (0 when there is none).
  cplx d_bias;
  // Distance from z to the nearest point where the map is not
  // differentiable in the real sense; +inf for smooth maps.
  double kink_distance;
};

namespace internal {

inline double Logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double Relu(double x) { return x > 0 ? x : 0.0; }
inline double Step(double x) { return x > 0 ? 1.0 : 0.0; }

// w = g(r) z with r = |z|: dw/dz = g + g' r / 2, dw/dz-bar = g' z^2 / (2r).
inline WirtingerPair RadialScalePartials(cplx z, double r, double g,
                                         double g_prime) {
  if (r == 0.0) return {cplx(g, 0.0), cplx(0.0, 0.0)};
  return {cplx(g + 0.5 * g_prime * r, 0.0), g_prime * z * z / (2.0 * r)};
}

// Phase-shifted cardioid 0.5 (1 + cos(theta + b)) z.
inline ActivationEval Cardioid(cplx z, double b) {
  const double r = std::abs(z);
  if (r == 0.0) return {cplx{}, {cplx{}, cplx{}}, cplx{}, 0.0};
  const cplx rot = std::polar(1.0, b);
  const cplx zr = z * rot;
  const double h = zr.real() / r;  // cos(theta + b)
  const double r3 = r * r * r;
  const cplx dh_dz = rot / (2.0 * r) - zr.real() * std::conj(z) / (2.0 * r3);
  const cplx dh_dzbar =
      std::conj(rot) / (2.0 * r) - zr.real() * z / (2.0 * r3);
  ActivationEval e;
  e.value = 0.5 * (1.0 + h) * z;
  e.wrt_z = {0.5 * (1.0 + h) + 0.5 * z * dh_dz, 0.5 * z * dh_dzbar};
  e.d_bias = -0.5 * z * (zr.imag() / r);
  e.kink_distance = r;
  return e;
}

inline ActivationEval ModRelu(cplx z, double b) {
  const double r = std::abs(z);
  const double shifted = r + b;
  ActivationEval e;
  e.kink_distance = std::min(r, std::abs(shifted));
  if (r == 0.0 || shifted <= 0.0) {
    e.value = cplx{};
    e.wrt_z = {cplx{}, cplx{}};
    e.d_bias = cplx{};
    return e;
  }
  const double denom = r + kPhaseEpsilon;
  const double g = shifted / denom;
  const double g_prime = (kPhaseEpsilon - b) / (denom * denom);
  e.value = g * z;
  e.wrt_z = RadialScalePartials(z, r, g, g_prime);
  e.d_bias = z / denom;
  return e;
}

inline ActivationEval IGaussian(cplx z, double sigma) {
  const double r = std::abs(z);
  ActivationEval e;
  e.kink_distance = std::numeric_limits<double>::infinity();
  e.d_bias = cplx{};
  if (r == 0.0) {
    e.value = cplx{};
    e.wrt_z = {cplx{}, cplx{}};
    return e;
  }
  const double s2 = sigma * sigma;
  const double q = r * r / (2.0 * s2);
  const double gate = -std::expm1(-q);  // 1 - exp(-r^2 / 2 sigma^2)
  const double denom = r + kPhaseEpsilon;
  // For r beyond ~1e4, gate * r / denom rounds to exactly 1; hold the
  // magnitude a few ulps below so |w| < 1 survives rounding.
  constexpr double kMaxMagnitude = 1.0 - 0x1.0p-50;
  const double g = std::min(gate / denom, kMaxMagnitude / r);
  const double g_prime = (r / s2) * std::exp(-q) / denom - gate / (denom * denom);
  e.value = g * z;
  e.wrt_z = RadialScalePartials(z, r, g, g_prime);
  return e;
}

}  // namespace internal

// Evaluates an activation, its Wirtinger partials and the bias derivative.
// `bias` is ignored by kinds without a trainable bias. ReLU-type kinks use a
// zero subgradient.
inline ActivationEval EvalActivation(ActivationKind kind, cplx z, double bias,
                                     const ActivationOptions& opts = {}) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double x = z.real();
  const double y = z.imag();
  switch (kind) {
    case ActivationKind::kSepSigmoid: {
      const double sx = internal::Logistic(x);
      const double sy = internal::Logistic(y);
      const double dx = sx * (1.0 - sx);
      const double dy = sy * (1.0 - sy);
      return {cplx(sx, sy), {cplx(0.5 * (dx + dy), 0), cplx(0.5 * (dx - dy), 0)},
              cplx{}, kInf};
    }
    case ActivationKind::kZRelu: {
      const bool pass = x >= 0.0 && y >= 0.0;
      const double slope = (x > 0.0 && y > 0.0) ? 1.0 : 0.0;
      return {pass ? z : cplx{}, {cplx(slope, 0), cplx{}}, cplx{},
              std::min(std::abs(x), std::abs(y))};
    }
    case ActivationKind::kModRelu:
      return internal::ModRelu(z, opts.modrelu_bias);
    case ActivationKind::kTrainableModRelu:
      return internal::ModRelu(z, bias);
    case ActivationKind::kCardioid:
      return internal::Cardioid(z, 0.0);
    case ActivationKind::kTrainableCardioidSingle:
    case ActivationKind::kTrainableCardioidPerFeature:
      return internal::Cardioid(z, bias);
    case ActivationKind::kSigLog: {
      const double r = std::abs(z);
      const double inv = 1.0 / (1.0 + r);
      WirtingerPair p{cplx(1.0, 0), cplx{}};
      if (r > 0.0) {
        p = {cplx(inv - 0.5 * r * inv * inv, 0), -z * z * inv * inv / (2.0 * r)};
      }
      return {z * inv, p, cplx{}, kInf};
    }
    case ActivationKind::kCRelu: {
      const double sx = internal::Step(x);
      const double sy = internal::Step(y);
      return {cplx(internal::Relu(x), internal::Relu(y)),
              {cplx(0.5 * (sx + sy), 0), cplx(0.5 * (sx - sy), 0)},
              cplx{},
              std::min(std::abs(x), std::abs(y))};
    }
    case ActivationKind::kIGaussian:
      return internal::IGaussian(z, opts.igaussian_sigma);
  }
  throw DomainError("unknown activation kind");
}

inline cplx ApplyActivation(ActivationKind kind, cplx z, double bias = 0.0,
                            const ActivationOptions& opts = {}) {
  return EvalActivation(kind, z, bias, opts).value;
}

}  // namespace zdp

#endif  // ZDP_ACTIVATIONS_H_
