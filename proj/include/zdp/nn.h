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

#ifndef ZDP_NN_H_
#define ZDP_NN_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zdp/activations.h"
#include "zdp/ctensor.h"
#include "zdp/error.h"
#include "zdp/rng.h"
#include "zdp/wirtinger.h"

namespace zdp {

// Probabilities are clamped into [kProbClamp, 1 - kProbClamp] before log.
inline constexpr double kProbClamp = 1e-12;

inline double Sigmoid(double x) { return internal::Logistic(x); }

// log(1 + e^x) without overflow.
inline double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct DenseLayer {
  CTensor weights;  // [in x out]
  CTensor bias;     // [out]
};

struct Conv2dLayer {
  CTensor kernels;  // [out_ch x in_ch x kh x kw]
  CTensor bias;     // [out_ch]
  std::size_t stride = 1;
};

// input . W + b for input [in] or [n x in]; bias broadcasts over rows.
inline CTensor DenseForward(const DenseLayer& layer, const CTensor& input) {
  if (layer.weights.rank() != 2 || layer.bias.size() != layer.weights.shape()[1]) {
    throw DomainError("dense: weights must be [in x out] with bias [out]");
  }
  CTensor out = Matmul(input, layer.weights);
  const std::size_t n_out = layer.bias.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += layer.bias[i % n_out];
  return out;
}

inline CTensor Conv2dForward(const Conv2dLayer& layer, const CTensor& input) {
  return ad::Conv2dValue(input, layer.kernels, layer.bias, layer.stride);
}

// sigma(|z| - centering).
inline double MagnitudeSigmoidHead(cplx logit, double centering = 0.0) {
  return Sigmoid(std::abs(logit) - centering);
}

// Softmax over |z_k|.
inline std::vector<double> SoftmaxMagnitudeHead(std::span<const cplx> logits) {
  if (logits.size() < 2) throw DomainError("softmax head needs >= 2 logits");
  std::vector<double> m(logits.size());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = std::abs(logits[k]);
  const double mx = *std::max_element(m.begin(), m.end());
  double z = 0.0;
  for (double& v : m) z += (v = std::exp(v - mx));
  for (double& v : m) v /= z;
  return m;
}

inline double CrossEntropy(std::span<const double> probabilities, std::size_t label) {
  if (label >= probabilities.size()) {
    throw DomainError("label " + std::to_string(label) + " out of range");
  }
  return -std::log(std::clamp(probabilities[label], kProbClamp, 1.0 - kProbClamp));
}

inline double BinaryCrossEntropy(double p, int label) {
  if (label != 0 && label != 1) throw DomainError("binary label must be 0 or 1");
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return label == 1 ? -std::log(q) : -std::log1p(-q);
}

namespace ad {

// -log softmax(|z|)_label as one node. The loss saturates at -log(1e-12),
// where its gradient is zero.
inline Var SoftmaxMagnitudeXent(Var logits, std::size_t label) {
  Tape& t = *logits.tape;
  const CTensor& z = t.value(logits);
  if (label >= z.size()) throw DomainError("label out of range");
  std::vector<double> p = SoftmaxMagnitudeHead(z.data());
  double m_max = 0.0;
  for (cplx v : z.data()) m_max = std::max(m_max, std::abs(v));
  double lse = 0.0;
  for (cplx v : z.data()) lse += std::exp(std::abs(v) - m_max);
  const double log_p = std::abs(z[label]) - m_max - std::log(lse);
  const double floor = std::log(kProbClamp);
  const bool clamped = log_p < floor;
  CTensor dz(z.shape()), dzbar(z.shape());
  double kink = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double r = std::abs(z[k]);
    kink = std::min(kink, r);
    if (clamped || r == 0.0) continue;
    const double g = p[k] - (k == label ? 1.0 : 0.0);  // dL/d|z_k|
    dz[k] = g * std::conj(z[k]) / (2.0 * r);
    dzbar[k] = g * z[k] / (2.0 * r);
  }
  t.NoteKinkDistance(kink);
  return t.Record(Primitive::kSoftmaxMagnitudeXent, {logits},
                  CTensor::Scalar(-std::max(log_p, floor)),
                  {{std::move(dz), std::move(dzbar)}});
}

// Binary cross-entropy of sigma(|z| - c) against label in {0, 1}; c is the
// real part of `centering`.
inline Var MagnitudeSigmoidBce(Var logit, Var centering, int label) {
  Tape& t = *logit.tape;
  if (label != 0 && label != 1) throw DomainError("binary label must be 0 or 1");
  const cplx z = t.value(logit).item();
  const double c = t.value(centering).item().real();
  const double r = std::abs(z);
  const double m = r - c;
  // log p = -softplus(-m), log(1 - p) = -softplus(m).
  const double raw = label == 1 ? Softplus(-m) : Softplus(m);
  const double cap = -std::log(kProbClamp);
  const bool clamped = raw > cap;
  const double g = clamped ? 0.0 : Sigmoid(m) - label;  // dL/dm
  CTensor dz = CTensor::Scalar(r > 0 ? g * std::conj(z) / (2.0 * r) : cplx{});
  CTensor dzbar = CTensor::Scalar(r > 0 ? g * z / (2.0 * r) : cplx{});
  // c is real: dL/dc = -g, split evenly over the Wirtinger pair.
  CTensor dc = CTensor::Scalar(-0.5 * g);
  t.NoteKinkDistance(r);
  return t.Record(Primitive::kMagnitudeSigmoidBce, {logit, centering},
                  CTensor::Scalar(std::min(raw, cap)),
                  {{std::move(dz), std::move(dzbar)}, {dc, dc}});
}

}  // namespace ad

enum class LayerType { kDense, kConv2d, kMaxPool2, kFlatten };
enum class HeadKind { kSoftmaxMagnitude, kMagnitudeSigmoid };

inline std::string_view HeadName(HeadKind h) {
  return h == HeadKind::kSoftmaxMagnitude ? "softmax_magnitude" : "magnitude_sigmoid";
}

struct LayerSpec {
  LayerType type = LayerType::kDense;
  std::size_t units = 0;         // dense
  std::size_t out_channels = 0;  // conv2d
  std::size_t kernel = 3;        // conv2d, square
  std::size_t stride = 1;        // conv2d
  std::optional<ActivationKind> activation;
};

struct Architecture {
  Shape input_shape;
  std::vector<LayerSpec> layers;
  HeadKind head = HeadKind::kSoftmaxMagnitude;
  std::size_t num_classes = 2;
  ActivationOptions activation_options;
};

// Where each parameter tensor lives in the flat parameter list.
enum class ParamRole { kWeight, kBias, kActivationBias, kHeadCentering };

struct ParamSlot {
  ParamRole role;
  std::size_t layer;  // index into Architecture::layers, or layers.size() for head
  Shape shape;
  std::size_t fan_in = 0;
};

namespace internal {

inline std::size_t OutputUnits(const Architecture& arch) {
  return arch.head == HeadKind::kMagnitudeSigmoid ? 1 : arch.num_classes;
}

}  // namespace internal

// Validates the architecture and lays out its parameters in forward order.
inline std::vector<ParamSlot> ParamLayout(const Architecture& arch) {
  if (arch.input_shape.empty()) throw DomainError("architecture needs an input shape");
  ValidateShape(arch.input_shape);
  if (arch.num_classes < 2) throw DomainError("architecture needs >= 2 classes");
  if (arch.head == HeadKind::kMagnitudeSigmoid && arch.num_classes != 2) {
    throw DomainError("magnitude_sigmoid head is binary only");
  }
  std::vector<ParamSlot> slots;
  Shape cur = arch.input_shape;
  for (std::size_t li = 0; li < arch.layers.size(); ++li) {
    const LayerSpec& l = arch.layers[li];
    switch (l.type) {
      case LayerType::kDense: {
        if (cur.size() != 1) throw DomainError("dense layer needs a rank-1 input; add flatten");
        if (l.units == 0) throw DomainError("dense layer needs units >= 1");
        slots.push_back({ParamRole::kWeight, li, {cur[0], l.units}, cur[0]});
        slots.push_back({ParamRole::kBias, li, {l.units}, 0});
        cur = {l.units};
        break;
      }
      case LayerType::kConv2d: {
        if (cur.size() != 3) throw DomainError("conv2d layer needs a [c,h,w] input");
        if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0) {
          throw DomainError("conv2d needs out_channels, kernel, stride >= 1");
        }
        if (cur[1] < l.kernel || cur[2] < l.kernel) {
          throw DomainError("conv2d kernel larger than input " + ShapeString(cur));
        }
        slots.push_back({ParamRole::kWeight, li,
                         {l.out_channels, cur[0], l.kernel, l.kernel},
                         cur[0] * l.kernel * l.kernel});
        slots.push_back({ParamRole::kBias, li, {l.out_channels}, 0});
        cur = {l.out_channels, (cur[1] - l.kernel) / l.stride + 1,
               (cur[2] - l.kernel) / l.stride + 1};
        break;
      }
      case LayerType::kMaxPool2:
        if (cur.size() != 3 || cur[1] < 2 || cur[2] < 2) {
          throw DomainError("maxpool2 needs a [c,h,w] input with h,w >= 2");
        }
        cur = {cur[0], cur[1] / 2, cur[2] / 2};
        break;
      case LayerType::kFlatten:
        cur = {NumElements(cur)};
        break;
    }
    if (l.activation) {
      if (l.type == LayerType::kMaxPool2 || l.type == LayerType::kFlatten) {
        throw DomainError("activations attach to dense or conv2d layers only");
      }
      switch (ActivationBiasArity(*l.activation)) {
        case BiasArity::kSingle:
          slots.push_back({ParamRole::kActivationBias, li, {1}, 0});
          break;
        case BiasArity::kPerFeature:
          slots.push_back({ParamRole::kActivationBias, li, cur, 0});
          break;
        case BiasArity::kNone:
          break;
      }
    }
  }
  if (cur.size() != 1 || cur[0] != internal::OutputUnits(arch)) {
    throw DomainError("final layer must output " +
                      std::to_string(internal::OutputUnits(arch)) + " units, got " +
                      ShapeString(cur));
  }
  if (arch.head == HeadKind::kMagnitudeSigmoid) {
    slots.push_back({ParamRole::kHeadCentering, arch.layers.size(), {1}, 0});
  }
  return slots;
}

// Weights ~ circular Gaussian with E|w|^2 = 1 / fan_in; everything else 0.
inline std::vector<CTensor> InitParams(const Architecture& arch, Rng& rng) {
  std::vector<CTensor> params;
  for (const ParamSlot& s : ParamLayout(arch)) {
    if (s.role == ParamRole::kWeight) {
      params.push_back(SampleCircularGaussian(s.shape, 1.0 / static_cast<double>(s.fan_in), rng));
    } else {
      params.emplace_back(s.shape);
    }
  }
  return params;
}

// Builds the network on the tape and returns the output logits.
inline Var ForwardLogits(Tape& tape, const Architecture& arch,
                         std::span<const Var> params, const CTensor& input) {
  if (input.shape() != arch.input_shape) {
    throw DomainError("input shape " + ShapeString(input.shape()) + " != " +
                      ShapeString(arch.input_shape));
  }
  Var x = tape.Leaf(input);
  std::size_t p = 0;
  auto next = [&]() {
    if (p >= params.size()) throw DomainError("too few parameters for architecture");
    return params[p++];
  };
  for (const LayerSpec& l : arch.layers) {
    switch (l.type) {
      case LayerType::kDense: {
        Var w = next();
        Var b = next();
        x = ad::Matmul(x, w) + b;
        break;
      }
      case LayerType::kConv2d: {
        Var k = next();
        Var b = next();
        x = ad::Conv2d(x, k, b, l.stride);
        break;
      }
      case LayerType::kMaxPool2:
        x = ad::MaxPool2(x);
        break;
      case LayerType::kFlatten:
        x = ad::Reshape(x, {tape.value(x).size()});
        break;
    }
    if (l.activation) {
      std::optional<Var> bias;
      if (ActivationBiasArity(*l.activation) != BiasArity::kNone) bias = next();
      x = ad::Activation(x, *l.activation, bias, arch.activation_options);
    }
  }
  return x;
}

// Per-example loss node.
inline Var LossNode(Tape& tape, const Architecture& arch, std::span<const Var> params,
                    const CTensor& input, int label) {
  Var logits = ForwardLogits(tape, arch, params, input);
  if (arch.head == HeadKind::kSoftmaxMagnitude) {
    return ad::SoftmaxMagnitudeXent(logits, static_cast<std::size_t>(label));
  }
  return ad::MagnitudeSigmoidBce(logits, params.back(), label);
}

struct Prediction {
  std::vector<double> probabilities;  // one per class
  std::size_t label = 0;              // argmax
};

inline Prediction Predict(const Architecture& arch, std::span<const CTensor> params,
                          const CTensor& input) {
  Tape tape;
  std::vector<Var> vars;
  for (const CTensor& p : params) vars.push_back(tape.Leaf(p));
  const CTensor& logits = tape.value(ForwardLogits(tape, arch, vars, input));
  Prediction out;
  if (arch.head == HeadKind::kSoftmaxMagnitude) {
    out.probabilities = SoftmaxMagnitudeHead(logits.data());
  } else {
    const double p1 = MagnitudeSigmoidHead(logits.item(), params.back().item().real());
    out.probabilities = {1.0 - p1, p1};
  }
  out.label = static_cast<std::size_t>(
      std::max_element(out.probabilities.begin(), out.probabilities.end()) -
      out.probabilities.begin());
  return out;
}

}  // namespace zdp

#endif  // ZDP_NN_H_
