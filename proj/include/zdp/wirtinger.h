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

#ifndef ZDP_WIRTINGER_H_
#define ZDP_WIRTINGER_H_

// Reverse-mode automatic differentiation over CR-calculus.
//
// Every node w = f(z_1, ..., z_k) stores its primal value and, for
// elementwise primitives, the Wirtinger pair (dw/dz_i, dw/dz_i-bar) for each
// input. Backward propagates the conjugate adjoint a = dL/d(.)-bar of a real
// loss L with
//
//   a_z += conj(a_w) * dw/dz-bar + a_w * conj(dw/dz),
//
// which for holomorphic f reduces to a_z += a_w * conj(f'(z)). The value
// returned for a parameter theta is dL/d(theta-bar) itself, with no factor
// of two: for L = z conj(z) the gradient is z, not 2z.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zdp/activations.h"
#include "zdp/ctensor.h"
#include "zdp/error.h"

namespace zdp {

enum class Primitive : int {
  kLeaf = 0,
  kAdd,
  kSub,
  kMul,
  kScale,
  kConj,
  kSquare,
  kReal,
  kAbs,
  kSum,
  kMatmul,
  kReshape,
  kConv2d,
  kMaxPool2,
  kActivation,
  kSoftmaxMagnitudeXent,
  kMagnitudeSigmoidBce,
};

inline const char* PrimitiveName(Primitive p) {
  switch (p) {
    case Primitive::kLeaf: return "leaf";
    case Primitive::kAdd: return "add";
    case Primitive::kSub: return "sub";
    case Primitive::kMul: return "mul";
    case Primitive::kScale: return "scale";
    case Primitive::kConj: return "conj";
    case Primitive::kSquare: return "square";
    case Primitive::kReal: return "real";
    case Primitive::kAbs: return "abs";
    case Primitive::kSum: return "sum";
    case Primitive::kMatmul: return "matmul";
    case Primitive::kReshape: return "reshape";
    case Primitive::kConv2d: return "conv2d";
    case Primitive::kMaxPool2: return "maxpool2";
    case Primitive::kActivation: return "activation";
    case Primitive::kSoftmaxMagnitudeXent: return "softmax_magnitude_xent";
    case Primitive::kMagnitudeSigmoidBce: return "magnitude_sigmoid_bce";
  }
  return nullptr;
}

// Primitives whose derivative with respect to the conjugate input is zero.
inline bool IsHolomorphic(Primitive p) {
  switch (p) {
    case Primitive::kAdd:
    case Primitive::kSub:
    case Primitive::kMul:
    case Primitive::kScale:
    case Primitive::kSquare:
    case Primitive::kSum:
    case Primitive::kMatmul:
    case Primitive::kReshape:
    case Primitive::kConv2d:
      return true;
    default:
      return false;
  }
}

struct PartialPair {
  CTensor dz;
  CTensor dzbar;
};

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

// Relative tolerance on the imaginary part of a loss.
// Non-finite values pass; callers report them with more context.
inline bool IsRealScalar(cplx v) {
  if (std::isnan(v.real()) || std::isnan(v.imag()) || std::isinf(std::abs(v))) return true;
  return std::abs(v.imag()) <= 1e-9 * (1.0 + std::abs(v.real()));
}

class Tape {
 public:
  struct Node {
    Primitive op = Primitive::kLeaf;
    std::vector<std::size_t> inputs;
    CTensor value;
    // Elementwise primitives: one pair per input. Each pair has the shape of
    // the larger of input and output (scalar ends broadcast).
    std::vector<PartialPair> partials;
    // conv2d stride; maxpool source indices.
    std::size_t stride = 1;
    std::vector<std::size_t> gather;
  };

  // Conjugate adjoints dL/d(.)-bar and plain adjoints dL/d(.) for a set of
  // variables; the second is recovered independently so callers can check
  // conjugate symmetry.
  struct Adjoints {
    std::vector<CTensor> conj_grad;
    std::vector<CTensor> grad;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Leaf(CTensor value) {
    Node n;
    n.value = std::move(value);
    return Push(std::move(n));
  }

  // Records an elementwise primitive from precomputed partials.
  Var Record(Primitive op, std::vector<Var> inputs, CTensor value,
             std::vector<PartialPair> partials) {
    if (inputs.size() != partials.size()) {
      throw ContractError("one partial pair per input is required");
    }
    Node n;
    n.op = op;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const std::size_t in_size = node(inputs[i]).value.size();
      const std::size_t expect = std::max(in_size, value.size());
      if ((in_size != expect && in_size != 1) ||
          (value.size() != expect && value.size() != 1) ||
          partials[i].dz.size() != expect ||
          partials[i].dzbar.size() != expect) {
        throw ContractError(std::string("partial shapes inconsistent for ") +
                            (PrimitiveName(op) ? PrimitiveName(op) : "?"));
      }
      n.inputs.push_back(inputs[i].id);
    }
    n.value = std::move(value);
    n.partials = std::move(partials);
    return Push(std::move(n));
  }

  Var RecordStructured(Primitive op, std::vector<Var> inputs, CTensor value,
                       std::size_t stride = 1,
                       std::vector<std::size_t> gather = {}) {
    Node n;
    n.op = op;
    for (Var v : inputs) n.inputs.push_back(v.id);
    n.value = std::move(value);
    n.stride = stride;
    n.gather = std::move(gather);
    return Push(std::move(n));
  }

  const CTensor& value(Var v) const { return node(v).value; }
  const Node& node(Var v) const { return nodes_.at(v.id); }
  std::size_t size() const { return nodes_.size(); }

  void NoteKinkDistance(double d) { min_kink_ = std::min(min_kink_, d); }
  double min_kink_distance() const { return min_kink_; }

  // dL/d(theta-bar) for each requested variable, L = Re(root).
  std::vector<CTensor> Backward(Var root, std::span<const Var> wrt) const {
    return BackwardBoth(root, wrt).conj_grad;
  }

  Adjoints BackwardBoth(Var root, std::span<const Var> wrt) const {
    const cplx loss = value(root).item();
    if (value(root).size() != 1 || !IsRealScalar(loss)) {
      throw ContractError("backward requires a real scalar root");
    }
    // L = (w + conj w) / 2, so dL/dw-bar = dL/dw = 1/2 at the root.
    return Propagate(root, cplx(0.5, 0.0), cplx(0.5, 0.0), wrt);
  }

  // Raw propagation from an arbitrary seed pair (a, b) on a scalar node.
  // Seeding (1, 0) on w = f(z) yields a_z = conj(dw/dz), b_z = conj(dw/dz-bar).
  Adjoints Propagate(Var root, cplx seed_conj, cplx seed_plain,
                     std::span<const Var> wrt) const {
    std::vector<std::optional<CTensor>> a(root.id + 1), b(root.id + 1);
    a[root.id] = CTensor::Full(value(root).shape(), seed_conj);
    b[root.id] = CTensor::Full(value(root).shape(), seed_plain);
    for (std::size_t id = root.id + 1; id-- > 0;) {
      if (!a[id]) continue;
      const Node& n = nodes_[id];
      if (n.op == Primitive::kLeaf) continue;
      PropagateNode(n, *a[id], *b[id], a, b);
    }
    Adjoints out;
    for (Var v : wrt) {
      const Shape& s = value(v).shape();
      out.conj_grad.push_back(v.id < a.size() && a[v.id] ? *a[v.id] : CTensor(s));
      out.grad.push_back(v.id < b.size() && b[v.id] ? *b[v.id] : CTensor(s));
    }
    return out;
  }

 private:
  Var Push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }

  static void Accumulate(std::optional<CTensor>& slot, const CTensor& shape_of,
                         std::size_t i, cplx v) {
    if (!slot) slot = CTensor(shape_of.shape());
    (*slot)[i] += v;
  }

  // Adjoint of a holomorphic linear map applied to both propagated
  // quantities: a_in = J^H a_out and b_in = J^T b_out = conj(J^H conj b_out).
  template <typename Vjp>
  void LinearBoth(const Node& n, const CTensor& aw, const CTensor& bw,
                  std::vector<std::optional<CTensor>>& a,
                  std::vector<std::optional<CTensor>>& b, Vjp vjp) const {
    std::vector<CTensor> ga = vjp(aw);
    std::vector<CTensor> gb = vjp(Conj(bw));
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const std::size_t in = n.inputs[k];
      const CTensor& like = nodes_[in].value;
      for (std::size_t i = 0; i < like.size(); ++i) {
        Accumulate(a[in], like, i, ga[k][i]);
        Accumulate(b[in], like, i, std::conj(gb[k][i]));
      }
    }
  }

  void PropagateNode(const Node& n, const CTensor& aw, const CTensor& bw,
                     std::vector<std::optional<CTensor>>& a,
                     std::vector<std::optional<CTensor>>& b) const {
    switch (n.op) {
      case Primitive::kAdd:
      case Primitive::kSub:
      case Primitive::kMul:
      case Primitive::kScale:
      case Primitive::kConj:
      case Primitive::kSquare:
      case Primitive::kReal:
      case Primitive::kAbs:
      case Primitive::kSum:
      case Primitive::kActivation:
      case Primitive::kSoftmaxMagnitudeXent:
      case Primitive::kMagnitudeSigmoidBce:
        PropagateElementwise(n, aw, bw, a, b);
        return;
      case Primitive::kMatmul:
        LinearBoth(n, aw, bw, a, b, [&](const CTensor& g) {
          return MatmulVjp(nodes_[n.inputs[0]].value, nodes_[n.inputs[1]].value, g);
        });
        return;
      case Primitive::kReshape:
        LinearBoth(n, aw, bw, a, b, [&](const CTensor& g) {
          return std::vector<CTensor>{Reshape(g, nodes_[n.inputs[0]].value.shape())};
        });
        return;
      case Primitive::kConv2d:
        LinearBoth(n, aw, bw, a, b, [&](const CTensor& g) {
          return Conv2dVjp(nodes_[n.inputs[0]].value, nodes_[n.inputs[1]].value,
                           n.stride, g);
        });
        return;
      case Primitive::kMaxPool2:
        LinearBoth(n, aw, bw, a, b, [&](const CTensor& g) {
          CTensor gi(nodes_[n.inputs[0]].value.shape());
          for (std::size_t i = 0; i < n.gather.size(); ++i) gi[n.gather[i]] += g[i];
          return std::vector<CTensor>{std::move(gi)};
        });
        return;
      default:
        break;
    }
    const char* name = PrimitiveName(n.op);
    throw ContractError(std::string("unregistered primitive on tape: ") +
                        (name ? name : std::to_string(static_cast<int>(n.op))));
  }

  void PropagateElementwise(const Node& n, const CTensor& aw, const CTensor& bw,
                            std::vector<std::optional<CTensor>>& a,
                            std::vector<std::optional<CTensor>>& b) const {
    const bool out_scalar = aw.size() == 1;
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const std::size_t in = n.inputs[k];
      const CTensor& like = nodes_[in].value;
      const bool in_scalar = like.size() == 1;
      const PartialPair& p = n.partials[k];
      for (std::size_t i = 0; i < p.dz.size(); ++i) {
        const cplx av = out_scalar ? aw[0] : aw[i];
        const cplx bv = out_scalar ? bw[0] : bw[i];
        const cplx ca = bv * p.dzbar[i] + av * std::conj(p.dz[i]);
        const cplx cb = bv * p.dz[i] + av * std::conj(p.dzbar[i]);
        const std::size_t j = in_scalar ? 0 : i;
        Accumulate(a[in], like, j, ca);
        Accumulate(b[in], like, j, cb);
      }
    }
  }

  static std::vector<CTensor> MatmulVjp(const CTensor& lhs, const CTensor& rhs,
                                        const CTensor& g) {
    const std::size_t k = lhs.shape().back();
    const std::size_t m = lhs.size() / k;
    const std::size_t n = rhs.size() / k;
    CTensor gl(lhs.shape()), gr(rhs.shape());
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const cplx lip = std::conj(lhs[i * k + p]);
        cplx acc{};
        for (std::size_t j = 0; j < n; ++j) {
          const cplx gij = g[i * n + j];
          acc += gij * std::conj(rhs[p * n + j]);
          gr[p * n + j] += lip * gij;
        }
        gl[i * k + p] += acc;
      }
    }
    return {std::move(gl), std::move(gr)};
  }

  static std::vector<CTensor> Conv2dVjp(const CTensor& x, const CTensor& kern,
                                        std::size_t stride, const CTensor& g) {
    const std::size_t ic = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const std::size_t oc = kern.shape()[0], kh = kern.shape()[2], kw = kern.shape()[3];
    const std::size_t oh = g.shape()[1], ow = g.shape()[2];
    CTensor gx(x.shape()), gk(kern.shape()), gb({oc});
    for (std::size_t o = 0; o < oc; ++o) {
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          const cplx go = g[(o * oh + i) * ow + j];
          gb[o] += go;
          for (std::size_t c = 0; c < ic; ++c) {
            for (std::size_t u = 0; u < kh; ++u) {
              for (std::size_t v = 0; v < kw; ++v) {
                const std::size_t xi = (c * h + i * stride + u) * w + j * stride + v;
                const std::size_t ki = ((o * ic + c) * kh + u) * kw + v;
                gx[xi] += go * std::conj(kern[ki]);
                gk[ki] += go * std::conj(x[xi]);
              }
            }
          }
        }
      }
    }
    return {std::move(gx), std::move(gk), std::move(gb)};
  }

  std::vector<Node> nodes_;
  double min_kink_ = std::numeric_limits<double>::infinity();
};

namespace ad {

namespace internal {

inline Tape& TapeOf(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) {
    throw ContractError("variables belong to different tapes");
  }
  return *a.tape;
}

inline CTensor Ones(const Shape& s) { return CTensor::Full(s, cplx(1.0, 0.0)); }

}  // namespace internal

inline Var Add(Var a, Var b) {
  Tape& t = internal::TapeOf(a, b);
  CTensor out = zdp::Add(t.value(a), t.value(b));
  const Shape& s = out.shape();
  return t.Record(Primitive::kAdd, {a, b}, std::move(out),
                  {{internal::Ones(s), CTensor(s)}, {internal::Ones(s), CTensor(s)}});
}

inline Var Sub(Var a, Var b) {
  Tape& t = internal::TapeOf(a, b);
  CTensor out = zdp::Sub(t.value(a), t.value(b));
  const Shape& s = out.shape();
  return t.Record(Primitive::kSub, {a, b}, std::move(out),
                  {{internal::Ones(s), CTensor(s)},
                   {CTensor::Full(s, cplx(-1.0, 0.0)), CTensor(s)}});
}

// Hadamard product.
inline Var Mul(Var a, Var b) {
  Tape& t = internal::TapeOf(a, b);
  const CTensor& va = t.value(a);
  const CTensor& vb = t.value(b);
  CTensor out = zdp::Mul(va, vb);
  const Shape& s = out.shape();
  return t.Record(Primitive::kMul, {a, b}, std::move(out),
                  {{vb, CTensor(s)}, {va, CTensor(s)}});
}

inline Var Scale(Var a, cplx c) {
  Tape& t = *a.tape;
  CTensor out = zdp::Scale(t.value(a), c);
  const Shape& s = out.shape();
  return t.Record(Primitive::kScale, {a}, std::move(out),
                  {{CTensor::Full(s, c), CTensor(s)}});
}

inline Var Conj(Var a) {
  Tape& t = *a.tape;
  CTensor out = zdp::Conj(t.value(a));
  const Shape& s = out.shape();
  return t.Record(Primitive::kConj, {a}, std::move(out),
                  {{CTensor(s), internal::Ones(s)}});
}

inline Var Square(Var a) {
  Tape& t = *a.tape;
  const CTensor& v = t.value(a);
  CTensor out = zdp::Mul(v, v);
  const Shape& s = out.shape();
  return t.Record(Primitive::kSquare, {a}, std::move(out),
                  {{zdp::Scale(v, 2.0), CTensor(s)}});
}

// Re(z) = (z + conj z) / 2.
inline Var Real(Var a) {
  Tape& t = *a.tape;
  const CTensor& v = t.value(a);
  CTensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  const Shape& s = out.shape();
  return t.Record(Primitive::kReal, {a}, std::move(out),
                  {{CTensor::Full(s, 0.5), CTensor::Full(s, 0.5)}});
}

// |z|: d/dz = conj(z) / 2|z|, d/dz-bar = z / 2|z|; zero subgradient at 0.
inline Var Abs(Var a) {
  Tape& t = *a.tape;
  const CTensor& v = t.value(a);
  CTensor out(v.shape()), dz(v.shape()), dzbar(v.shape());
  double kink = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = std::abs(v[i]);
    out[i] = r;
    kink = std::min(kink, r);
    if (r > 0) {
      dz[i] = std::conj(v[i]) / (2.0 * r);
      dzbar[i] = v[i] / (2.0 * r);
    }
  }
  t.NoteKinkDistance(kink);
  return t.Record(Primitive::kAbs, {a}, std::move(out), {{std::move(dz), std::move(dzbar)}});
}

inline Var Sum(Var a) {
  Tape& t = *a.tape;
  const CTensor& v = t.value(a);
  cplx s{};
  for (cplx z : v.data()) s += z;
  return t.Record(Primitive::kSum, {a}, CTensor::Scalar(s),
                  {{internal::Ones(v.shape()), CTensor(v.shape())}});
}

inline Var Matmul(Var a, Var b) {
  Tape& t = internal::TapeOf(a, b);
  return t.RecordStructured(Primitive::kMatmul, {a, b},
                            zdp::Matmul(t.value(a), t.value(b)));
}

inline Var Reshape(Var a, Shape shape) {
  Tape& t = *a.tape;
  return t.RecordStructured(Primitive::kReshape, {a},
                            zdp::Reshape(t.value(a), std::move(shape)));
}

// Valid cross-correlation of x [ic x h x w] with kernels [oc x ic x kh x kw]
// plus bias [oc].
inline CTensor Conv2dValue(const CTensor& x, const CTensor& kern,
                           const CTensor& bias, std::size_t stride) {
  if (x.rank() != 3 || kern.rank() != 4 || bias.rank() != 1) {
    throw DomainError("conv2d: expected input [c,h,w], kernels [o,c,kh,kw], bias [o]");
  }
  const std::size_t ic = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const std::size_t oc = kern.shape()[0], kh = kern.shape()[2], kw = kern.shape()[3];
  if (kern.shape()[1] != ic || bias.size() != oc || stride == 0 || h < kh || w < kw) {
    throw DomainError("conv2d: incompatible shapes input " + ShapeString(x.shape()) +
                      " kernels " + ShapeString(kern.shape()));
  }
  const std::size_t oh = (h - kh) / stride + 1, ow = (w - kw) / stride + 1;
  CTensor out({oc, oh, ow});
  for (std::size_t o = 0; o < oc; ++o) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        cplx acc = bias[o];
        for (std::size_t c = 0; c < ic; ++c) {
          for (std::size_t u = 0; u < kh; ++u) {
            for (std::size_t v = 0; v < kw; ++v) {
              acc += kern[((o * ic + c) * kh + u) * kw + v] *
                     x[(c * h + i * stride + u) * w + j * stride + v];
            }
          }
        }
        out[(o * oh + i) * ow + j] = acc;
      }
    }
  }
  return out;
}

inline Var Conv2d(Var x, Var kernels, Var bias, std::size_t stride) {
  Tape& t = internal::TapeOf(x, kernels);
  internal::TapeOf(x, bias);
  return t.RecordStructured(
      Primitive::kConv2d, {x, kernels, bias},
      Conv2dValue(t.value(x), t.value(kernels), t.value(bias), stride), stride);
}

// 2x2 max pooling by magnitude over [c x h x w]; odd trailing rows and
// columns are dropped.
inline Var MaxPool2(Var x) {
  Tape& t = *x.tape;
  const CTensor& v = t.value(x);
  if (v.rank() != 3 || v.shape()[1] < 2 || v.shape()[2] < 2) {
    throw DomainError("maxpool2: expected [c,h,w] with h,w >= 2");
  }
  const std::size_t c = v.shape()[0], h = v.shape()[1], w = v.shape()[2];
  const std::size_t oh = h / 2, ow = w / 2;
  CTensor out({c, oh, ow});
  std::vector<std::size_t> gather(out.size());
  // Ties in magnitude switch the selected entry: a kink.
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = (k * h + 2 * i) * w + 2 * j;
        for (std::size_t u = 0; u < 2; ++u) {
          for (std::size_t q = 0; q < 2; ++q) {
            const std::size_t idx = (k * h + 2 * i + u) * w + 2 * j + q;
            if (std::abs(v[idx]) > std::abs(v[best])) best = idx;
          }
        }
        for (std::size_t u = 0; u < 2; ++u) {
          for (std::size_t q = 0; q < 2; ++q) {
            const std::size_t idx = (k * h + 2 * i + u) * w + 2 * j + q;
            if (idx != best) gap = std::min(gap, std::abs(v[best]) - std::abs(v[idx]));
          }
        }
        const std::size_t o = (k * oh + i) * ow + j;
        out[o] = v[best];
        gather[o] = best;
      }
    }
  }
  t.NoteKinkDistance(gap);
  return t.RecordStructured(Primitive::kMaxPool2, {x}, std::move(out), 1,
                            std::move(gather));
}

// Elementwise activation. `bias` holds one scalar (shared) or one per
// element; only its real part is used, so its conjugate gradient is real.
inline Var Activation(Var z, ActivationKind kind, std::optional<Var> bias = {},
                      const ActivationOptions& opts = {}) {
  Tape& t = *z.tape;
  const CTensor& v = t.value(z);
  const BiasArity arity = ActivationBiasArity(kind);
  if ((arity == BiasArity::kNone) != !bias.has_value()) {
    throw DomainError(std::string("activation ") + std::string(ActivationName(kind)) +
                      (bias ? " takes no bias" : " requires a bias"));
  }
  const CTensor* b = bias ? &t.value(*bias) : nullptr;
  if (b) {
    const std::size_t want = arity == BiasArity::kSingle ? 1 : v.size();
    if (b->size() != want) {
      throw DomainError("activation bias has " + std::to_string(b->size()) +
                        " entries, expected " + std::to_string(want));
    }
  }
  const Shape& s = v.shape();
  CTensor out(s), dz(s), dzbar(s), db(s);
  double kink = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double bi = b ? (*b)[b->size() == 1 ? 0 : i].real() : 0.0;
    const ActivationEval e = EvalActivation(kind, v[i], bi, opts);
    out[i] = e.value;
    dz[i] = e.wrt_z.dz;
    dzbar[i] = e.wrt_z.dzbar;
    db[i] = 0.5 * e.d_bias;
    kink = std::min(kink, e.kink_distance);
  }
  t.NoteKinkDistance(kink);
  if (!bias) {
    return t.Record(Primitive::kActivation, {z}, std::move(out),
                    {{std::move(dz), std::move(dzbar)}});
  }
  CTensor db2 = db;
  return t.Record(Primitive::kActivation, {z, *bias}, std::move(out),
                  {{std::move(dz), std::move(dzbar)}, {std::move(db), std::move(db2)}});
}

}  // namespace ad

inline Var operator+(Var a, Var b) { return ad::Add(a, b); }
inline Var operator-(Var a, Var b) { return ad::Sub(a, b); }
inline Var operator*(Var a, Var b) { return ad::Mul(a, b); }

// A differentiable program: builds its loss on `tape` from parameter leaves.
using ModelFn = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct ForwardResult {
  double loss = 0.0;
  std::unique_ptr<Tape> tape;
  Var root;
  std::vector<Var> params;
};

inline ForwardResult Forward(const ModelFn& model, std::span<const CTensor> params) {
  ForwardResult r;
  r.tape = std::make_unique<Tape>();
  for (const CTensor& p : params) r.params.push_back(r.tape->Leaf(p));
  r.root = model(*r.tape, r.params);
  const CTensor& out = r.tape->value(r.root);
  if (out.size() != 1) {
    throw ContractError("loss must be scalar, got shape " + ShapeString(out.shape()));
  }
  if (!IsRealScalar(out.item())) {
    throw ContractError("loss must be real, imaginary part " +
                        std::to_string(out.item().imag()));
  }
  r.loss = out.item().real();
  return r;
}

// Conjugate gradient dL/d(theta-bar) per parameter.
using ConjugateGradient = std::vector<CTensor>;

inline ConjugateGradient Backward(const ForwardResult& fwd) {
  return fwd.tape->Backward(fwd.root, fwd.params);
}

inline ConjugateGradient ValueAndGrad(const ModelFn& model,
                                      std::span<const CTensor> params,
                                      double* loss = nullptr) {
  ForwardResult fwd = Forward(model, params);
  if (loss) *loss = fwd.loss;
  return Backward(fwd);
}

struct GradcheckResult {
  // Largest ||analytic - numeric|| / (||analytic|| + ||numeric||) over the
  // parameter tensors.
  double max_relative_error = 0.0;
  // Same ratio entry by entry; dominated by roundoff where |g| is tiny.
  double max_elementwise_error = 0.0;
  // Smallest distance of any activation input to a kink at the base point.
  double min_kink_distance = std::numeric_limits<double>::infinity();
  bool finite = true;
};

inline double RelativeError(cplx a, cplx b) {
  return std::abs(a - b) / (1e-8 + std::abs(a) + std::abs(b));
}

inline double RelativeError(const CTensor& a, const CTensor& b) {
  const double diff = L2Norm(Sub(a, b));
  const double scale = L2Norm(a) + L2Norm(b);
  return scale == 0.0 ? 0.0 : diff / scale;
}

// Compares backward against 1/2 (D_x + i D_y), with D_x and D_y
// fourth-order central differences of step h in the real and imaginary
// part of each entry.
inline GradcheckResult Gradcheck(const ModelFn& model, std::vector<CTensor> params,
                                 double h = 1e-4) {
  GradcheckResult result;
  const ForwardResult base = Forward(model, params);
  result.min_kink_distance = base.tape->min_kink_distance();
  const ConjugateGradient analytic = Backward(base);
  for (std::size_t p = 0; p < params.size(); ++p) {
    CTensor numeric(params[p].shape());
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const cplx saved = params[p][i];
      auto loss_at = [&](cplx step) {
        params[p][i] = saved + step;
        const double l = Forward(model, params).loss;
        params[p][i] = saved;
        return l;
      };
      auto derivative = [&](cplx dir) {
        return (8.0 * (loss_at(h * dir) - loss_at(-h * dir)) -
                (loss_at(2.0 * h * dir) - loss_at(-2.0 * h * dir))) /
               (12.0 * h);
      };
      numeric[i] = 0.5 * cplx(derivative(cplx(1, 0)), derivative(cplx(0, 1)));
      result.max_elementwise_error =
          std::max(result.max_elementwise_error, RelativeError(analytic[p][i], numeric[i]));
    }
    const double err = RelativeError(analytic[p], numeric);
    if (!std::isfinite(err) || !AllFinite(numeric)) {
      result.finite = false;
      result.max_relative_error = std::numeric_limits<double>::infinity();
      return result;
    }
    result.max_relative_error = std::max(result.max_relative_error, err);
  }
  return result;
}

// Wirtinger pair of a unary use of `op` at z, read back from the tape by
// seeding the output with (a, b) = (1, 0). Binary primitives take `other`
// as their second operand.
inline WirtingerPair PrimitivePartials(Primitive op, cplx z,
                                       cplx other = cplx(0.3, -0.7)) {
  Tape t;
  Var x = t.Leaf(CTensor::Scalar(z));
  Var c = t.Leaf(CTensor::Scalar(other));
  Var w;
  switch (op) {
    case Primitive::kAdd: w = ad::Add(x, c); break;
    case Primitive::kSub: w = ad::Sub(x, c); break;
    case Primitive::kMul: w = ad::Mul(x, c); break;
    case Primitive::kScale: w = ad::Scale(x, other); break;
    case Primitive::kConj: w = ad::Conj(x); break;
    case Primitive::kSquare: w = ad::Square(x); break;
    case Primitive::kReal: w = ad::Real(x); break;
    case Primitive::kAbs: w = ad::Abs(x); break;
    case Primitive::kSum: w = ad::Sum(x); break;
    case Primitive::kMatmul: w = ad::Matmul(x, c); break;
    case Primitive::kReshape: w = ad::Reshape(x, {1, 1}); break;
    default:
      throw DomainError("no scalar form for primitive");
  }
  const Var wrt[] = {x};
  Tape::Adjoints adj = t.Propagate(w, cplx(1, 0), cplx(0, 0), wrt);
  return {std::conj(adj.conj_grad[0].item()), std::conj(adj.grad[0].item())};
}

// Largest |dw/dz-bar| of `op` over the sample points.
inline double HolomorphyResidual(Primitive op, std::span<const cplx> points) {
  double worst = 0.0;
  for (cplx z : points) worst = std::max(worst, std::abs(PrimitivePartials(op, z).dzbar));
  return worst;
}

inline double HolomorphyResidual(ActivationKind kind, std::span<const cplx> points,
                                 const ActivationOptions& opts = {}) {
  double worst = 0.0;
  for (cplx z : points) {
    worst = std::max(worst, std::abs(EvalActivation(kind, z, 0.0, opts).wrt_z.dzbar));
  }
  return worst;
}

}  // namespace zdp

#endif  // ZDP_WIRTINGER_H_
