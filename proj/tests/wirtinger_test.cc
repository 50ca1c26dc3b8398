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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "zdp/nn.h"
#include "zdp/wirtinger.h"

namespace zdp {
namespace {

using namespace std::complex_literals;

Var ZZbar(Tape&, std::span<const Var> p) { return ad::Mul(p[0], ad::Conj(p[0])); }

TEST(ForwardTest, ZZbarLoss) {
  const CTensor params[] = {CTensor::Scalar(3.0 + 4i)};
  EXPECT_EQ(Forward(ZZbar, params).loss, 25.0);
}

TEST(ForwardTest, ConstantLoss) {
  const ModelFn constant = [](Tape& t, std::span<const Var>) {
    return t.Leaf(CTensor::Scalar(0.0));
  };
  const CTensor params[] = {CTensor::Vector({1.0 + 1i, 2.0})};
  ForwardResult f = Forward(constant, params);
  EXPECT_EQ(f.loss, 0.0);
  const ConjugateGradient g = Backward(f);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0], CTensor({2}));
}

TEST(ForwardTest, RejectsNonScalarOrComplexLoss) {
  const CTensor params[] = {CTensor::Vector({1.0 + 1i, 2.0})};
  const ModelFn vector_loss = [](Tape&, std::span<const Var> p) { return p[0]; };
  EXPECT_THROW(Forward(vector_loss, params), ContractError);
  const ModelFn complex_loss = [](Tape&, std::span<const Var> p) { return ad::Sum(p[0]); };
  EXPECT_THROW(Forward(complex_loss, params), ContractError);
  // Within tolerance of real is accepted.
  const ModelFn nearly_real = [](Tape& t, std::span<const Var>) {
    return t.Leaf(CTensor::Scalar(cplx(1e6, 1e-4)));
  };
  EXPECT_NO_THROW(Forward(nearly_real, params));
}

TEST(BackwardTest, ZZbarGradientIsZ) {
  const CTensor params[] = {CTensor::Scalar(3.0 + 4i)};
  const ConjugateGradient g = ValueAndGrad(ZZbar, params);
  EXPECT_EQ(g[0].item(), 3.0 + 4i);
  EXPECT_EQ(std::abs(g[0].item()), 5.0);
}

TEST(BackwardTest, RealPartOfScaledInput) {
  const ModelFn model = [](Tape&, std::span<const Var> p) {
    return ad::Real(ad::Scale(p[0], 2.0));
  };
  const CTensor params[] = {CTensor::Scalar(0.3 - 1.7i)};
  EXPECT_EQ(ValueAndGrad(model, params)[0].item(), 1.0 + 0i);
  // General c: dL/dz-bar = conj(c) / 2.
  const ModelFn model_c = [](Tape&, std::span<const Var> p) {
    return ad::Real(ad::Scale(p[0], 2.0 - 3i));
  };
  EXPECT_NEAR(std::abs(ValueAndGrad(model_c, params)[0].item() - (1.0 + 1.5i)), 0.0, 1e-15);
}

TEST(BackwardTest, HolomorphicChainMatchesFiniteDifferences) {
  // w = z^2, L = w w-bar = |z|^4, dL/dz-bar = 2 z |z|^2.
  const ModelFn model = [](Tape&, std::span<const Var> p) {
    const Var w = ad::Square(p[0]);
    return ad::Mul(w, ad::Conj(w));
  };
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const cplx z = rng.StandardNormalPair();
    const CTensor params[] = {CTensor::Scalar(z)};
    const cplx g = ValueAndGrad(model, params)[0].item();
    EXPECT_NEAR(std::abs(g - 2.0 * z * std::norm(z)), 0.0, 1e-12 * (1 + std::abs(g)));
    const GradcheckResult r = Gradcheck(model, {params[0]}, 1e-5);
    EXPECT_LE(r.max_relative_error, 1e-6);
  }
}

TEST(BackwardTest, UnregisteredPrimitiveThrows) {
  Tape t;
  const Var x = t.Leaf(CTensor::Scalar(1.0));
  const Var y = t.RecordStructured(static_cast<Primitive>(999), {x}, CTensor::Scalar(2.0));
  const Var wrt[] = {x};
  EXPECT_THROW(t.Backward(y, wrt), ContractError);
}

TEST(BackwardTest, NonRealRootThrows) {
  Tape t;
  const Var x = t.Leaf(CTensor::Scalar(1.0 + 1i));
  const Var wrt[] = {x};
  EXPECT_THROW(t.Backward(x, wrt), ContractError);
}

TEST(BackwardTest, RecordChecksPartialShapes) {
  Tape t;
  const Var x = t.Leaf(CTensor({3}));
  EXPECT_THROW(t.Record(Primitive::kAdd, {x}, CTensor({3}), {{CTensor({2}), CTensor({2})}}),
               ContractError);
  EXPECT_THROW(t.Record(Primitive::kAdd, {x}, CTensor({3}), {}), ContractError);
  Tape other;
  const Var y = other.Leaf(CTensor({3}));
  EXPECT_THROW(ad::Add(x, y), ContractError);
}

TEST(BackwardTest, GradientShapeMatchesParameter) {
  const ModelFn model = [](Tape&, std::span<const Var> p) {
    return ad::Real(ad::Sum(ad::Matmul(p[0], p[1])));
  };
  Rng rng(2);
  const CTensor params[] = {SampleCircularGaussian({2, 3}, 1.0, rng),
                            SampleCircularGaussian({3, 4}, 1.0, rng)};
  const ConjugateGradient g = ValueAndGrad(model, params);
  EXPECT_EQ(g[0].shape(), params[0].shape());
  EXPECT_EQ(g[1].shape(), params[1].shape());
}

TEST(GradcheckTest, ZZbarWithinTolerance) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const GradcheckResult r =
        Gradcheck(ZZbar, {CTensor::Scalar(3.0 * rng.StandardNormalPair())}, 1e-5);
    EXPECT_TRUE(r.finite);
    EXPECT_LE(r.max_relative_error, 1e-6);
    EXPECT_LE(r.max_elementwise_error, 1e-6);
  }
}

TEST(GradcheckTest, ConstantIsExactlyZero) {
  const ModelFn constant = [](Tape& t, std::span<const Var>) {
    return t.Leaf(CTensor::Scalar(4.0));
  };
  const GradcheckResult r = Gradcheck(constant, {CTensor::Vector({1.0, 1i})});
  EXPECT_EQ(r.max_relative_error, 0.0);
  EXPECT_EQ(r.max_elementwise_error, 0.0);
}

TEST(GradcheckTest, NonFiniteDifferencesAreReportedAsFailure) {
  const cplx base = 0.5 + 0.5i;
  const ModelFn model = [base](Tape& t, std::span<const Var> p) {
    if (t.value(p[0]).item() != base) {
      return t.Leaf(CTensor::Scalar(std::numeric_limits<double>::infinity()));
    }
    return ad::Mul(p[0], ad::Conj(p[0]));
  };
  const GradcheckResult r = Gradcheck(model, {CTensor::Scalar(base)});
  EXPECT_FALSE(r.finite);
  EXPECT_TRUE(std::isinf(r.max_relative_error));
}

TEST(GradcheckTest, DetectsAWrongPartial) {
  // A primitive that claims w = conj(z) is holomorphic.
  const ModelFn model = [](Tape& t, std::span<const Var> p) {
    const CTensor& v = t.value(p[0]);
    const Var w = t.Record(Primitive::kConj, {p[0]}, Conj(v),
                           {{CTensor::Full(v.shape(), 1.0), CTensor(v.shape())}});
    return ad::Real(ad::Sum(ad::Mul(w, ad::Conj(ad::Square(w)))));
  };
  Rng rng(4);
  const GradcheckResult r = Gradcheck(model, {SampleCircularGaussian({3}, 1.0, rng)});
  EXPECT_GT(r.max_relative_error, 1e-2);
}

TEST(HolomorphyTest, SquareAndConjPairs) {
  const WirtingerPair sq = PrimitivePartials(Primitive::kSquare, 1.0 + 1i);
  EXPECT_EQ(sq.dzbar, 0.0 + 0i);
  EXPECT_EQ(sq.dz, 2.0 + 2i);
  const WirtingerPair cj = PrimitivePartials(Primitive::kConj, 1.0 + 1i);
  EXPECT_EQ(cj.dzbar, 1.0 + 0i);
  EXPECT_EQ(cj.dz, 0.0 + 0i);
  EXPECT_FALSE(IsHolomorphic(Primitive::kConj));
  EXPECT_TRUE(IsHolomorphic(Primitive::kSquare));
}

TEST(HolomorphyTest, CReluQuadrantPair) {
  const ActivationEval e = EvalActivation(ActivationKind::kCRelu, 0.7 - 0.4i, 0.0);
  EXPECT_EQ(e.wrt_z.dz, 0.5 + 0i);
  EXPECT_EQ(e.wrt_z.dzbar, 0.5 + 0i);
}

TEST(HolomorphyTest, HolomorphicPrimitivesHaveZeroResidual) {
  Rng rng(5);
  std::vector<cplx> points;
  for (int i = 0; i < 200; ++i) points.push_back(2.0 * rng.StandardNormalPair());
  for (Primitive p : {Primitive::kAdd, Primitive::kSub, Primitive::kMul, Primitive::kScale,
                      Primitive::kSquare, Primitive::kSum, Primitive::kMatmul,
                      Primitive::kReshape}) {
    ASSERT_TRUE(IsHolomorphic(p)) << PrimitiveName(p);
    EXPECT_EQ(HolomorphyResidual(p, points), 0.0) << PrimitiveName(p);
  }
  for (Primitive p : {Primitive::kConj, Primitive::kAbs, Primitive::kReal}) {
    EXPECT_FALSE(IsHolomorphic(p));
    EXPECT_GT(HolomorphyResidual(p, points), 0.1) << PrimitiveName(p);
  }
}

TEST(Factor2Test, ZZbarRatioIsTwo) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const cplx z = 5.0 * rng.StandardNormalPair();
    const CTensor params[] = {CTensor::Scalar(z)};
    const double wirtinger = std::abs(ValueAndGrad(ZZbar, params)[0].item());
    // Gradient of x^2 + y^2 over (x, y).
    const double flattened = std::hypot(2.0 * z.real(), 2.0 * z.imag());
    EXPECT_NEAR(wirtinger, std::abs(z), 1e-12 * std::abs(z));
    EXPECT_NEAR(flattened, 2.0 * std::abs(z), 1e-12 * std::abs(z));
    EXPECT_NEAR(flattened / wirtinger, 2.0, 1e-12);
  }
}

// A loss touching every primitive kind.
Var Mixed(Tape& t, std::span<const Var> p) {
  Var x = t.Leaf(CTensor({1, 4, 4}, std::vector<cplx>(16, 0.3 - 0.2i)));
  x = ad::Add(x, p[0]);
  x = ad::Conv2d(x, p[1], p[2], 1);
  x = ad::Activation(x, ActivationKind::kCardioid);
  x = ad::MaxPool2(x);
  x = ad::Reshape(x, {2});
  x = ad::Activation(x, ActivationKind::kModRelu);
  x = ad::Matmul(x, p[3]);
  x = ad::Sub(ad::Square(x), ad::Scale(ad::Conj(x), 0.5 + 0.1i));
  Var real = ad::Real(ad::Sum(ad::Mul(x, x)));
  Var mag = ad::Sum(ad::Abs(x));
  return ad::Add(ad::Add(real, mag), ad::SoftmaxMagnitudeXent(x, 1));
}

std::vector<CTensor> MixedParams(Rng& rng) {
  return {SampleCircularGaussian({1, 4, 4}, 1.0, rng), SampleCircularGaussian({2, 1, 3, 3}, 0.3, rng),
          SampleCircularGaussian({2}, 0.3, rng), SampleCircularGaussian({2, 3}, 1.0, rng)};
}

TEST(PropertyTest, ConjugateSymmetry) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::vector<CTensor> params = MixedParams(rng);
    ForwardResult f = Forward(Mixed, params);
    const Tape::Adjoints adj = f.tape->BackwardBoth(f.root, f.params);
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].size(); ++i) {
        const cplx a = adj.conj_grad[k][i];
        const cplx b = adj.grad[k][i];
        EXPECT_NEAR(std::abs(b - std::conj(a)), 0.0, 1e-12 * (1 + std::abs(a)));
      }
    }
  }
}

TEST(PropertyTest, MixedNetworkGradcheck) {
  Rng rng(8);
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const GradcheckResult r = Gradcheck(Mixed, MixedParams(rng));
    if (r.min_kink_distance < 1e-3) continue;
    ++checked;
    EXPECT_LE(r.max_relative_error, 1e-5);
  }
  EXPECT_GE(checked, 5);
}

TEST(PropertyTest, Linearity) {
  Rng rng(9);
  const ModelFn l1 = Mixed;
  const ModelFn l2 = [](Tape&, std::span<const Var> p) {
    return ad::Real(ad::Sum(ad::Mul(p[3], ad::Square(p[3]))));
  };
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<CTensor> params = MixedParams(rng);
    const double a = rng.StandardNormal(), b = rng.StandardNormal();
    const ModelFn combo = [&](Tape& t, std::span<const Var> p) {
      return ad::Add(ad::Scale(l1(t, p), a), ad::Scale(l2(t, p), b));
    };
    const ConjugateGradient g1 = ValueAndGrad(l1, params);
    const ConjugateGradient g2 = ValueAndGrad(l2, params);
    const ConjugateGradient g = ValueAndGrad(combo, params);
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].size(); ++i) {
        const cplx want = a * g1[k][i] + b * g2[k][i];
        EXPECT_NEAR(std::abs(g[k][i] - want), 0.0, 1e-12 * (1 + std::abs(want)));
      }
    }
  }
}

TEST(PropertyTest, SmoothNetworksPassGradcheckOverManySeeds) {
  Architecture arch;
  arch.input_shape = {4};
  arch.num_classes = 3;
  arch.layers = {{LayerType::kDense, 6, 0, 3, 1, ActivationKind::kCardioid},
                 {LayerType::kDense, 5, 0, 3, 1, ActivationKind::kIGaussian},
                 {LayerType::kDense, 3, 0, 3, 1, ActivationKind::kSigLog}};
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::vector<CTensor> params = InitParams(arch, rng);
    for (CTensor& p : params) p = Add(p, SampleCircularGaussian(p.shape(), 0.1, rng));
    const CTensor x = SampleCircularGaussian({4}, 1.0, rng);
    const int label = static_cast<int>(rng.UniformInt(3));
    const ModelFn model = [&](Tape& t, std::span<const Var> p) {
      return LossNode(t, arch, p, x, label);
    };
    worst = std::max(worst, Gradcheck(model, params).max_relative_error);
  }
  EXPECT_LE(worst, 1e-5);
}

}  // namespace
}  // namespace zdp
