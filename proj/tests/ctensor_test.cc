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
#include <set>

#include <gtest/gtest.h>

#include "oracles.h"
#include "zdp/ctensor.h"
#include "zdp/rng.h"

namespace zdp {
namespace {

using namespace std::complex_literals;

CTensor RandomTensor(const Shape& shape, Rng& rng) {
  return SampleCircularGaussian(shape, 2.0, rng);
}

TEST(CTensorTest, ConstructionChecksShape) {
  EXPECT_THROW(CTensor({2, 3}, std::vector<cplx>(5)), DomainError);
  EXPECT_THROW(CTensor(Shape{}), DomainError);
  EXPECT_THROW(CTensor(Shape{3, 0}), DomainError);
  const CTensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  for (cplx z : t.data()) EXPECT_EQ(z, cplx(0, 0));
}

TEST(CTensorTest, StorageIsInterleavedRowMajor) {
  const CTensor t({2, 2}, {1.0 + 2i, 3.0 + 4i, 5.0 + 6i, 7.0 + 8i});
  const double* raw = reinterpret_cast<const double*>(t.data().data());
  for (int k = 0; k < 8; ++k) EXPECT_EQ(raw[k], k + 1.0);
}

TEST(CTensorTest, ElementwiseExamples) {
  EXPECT_EQ(Conj(CTensor::Scalar(1.0 + 2i)).item(), 1.0 - 2i);
  EXPECT_EQ(Mul(CTensor::Scalar(1.0 + 1i), CTensor::Scalar(1.0 - 1i)).item(), 2.0 + 0i);
  EXPECT_EQ(Add(CTensor::Vector({1.0, 2i}), CTensor::Vector({1i, 3.0})), CTensor::Vector({1.0 + 1i, 3.0 + 2i}));
  EXPECT_EQ(Sub(CTensor::Vector({1.0, 2i}), CTensor::Vector({1i, 3.0})), CTensor::Vector({1.0 - 1i, -3.0 + 2i}));
  EXPECT_EQ(Scale(CTensor::Vector({1.0, 1i}), 1i), CTensor::Vector({1i, -1.0}));
  EXPECT_EQ(Abs(CTensor::Vector({3.0 + 4i})).item(), cplx(5.0, 0.0));
  EXPECT_NEAR(Arg(CTensor::Vector({1i})).item().real(), std::numbers::pi / 2, 1e-15);
}

TEST(CTensorTest, ArgOfZeroIsZero) {
  EXPECT_EQ(SafeArg(0.0), 0.0);
  EXPECT_EQ(SafeArg(cplx(-0.0, 0.0)), 0.0);
  EXPECT_EQ(Arg(CTensor({3})), CTensor({3}));
}

TEST(CTensorTest, ShapeMismatchIsDomainError) {
  EXPECT_THROW(Add(CTensor({2}), CTensor({3})), DomainError);
  EXPECT_THROW(Sub(CTensor({2}), CTensor({2, 1})), DomainError);
  EXPECT_THROW(Mul(CTensor({2}), CTensor({3})), DomainError);
  EXPECT_THROW(Matmul(CTensor({2, 3}), CTensor({2, 3})), DomainError);
  EXPECT_THROW(Reshape(CTensor({2, 3}), {5}), DomainError);
}

TEST(CTensorTest, MatmulHandExample) {
  const CTensor a({1, 2}, {1i, 1.0});
  const CTensor b({2, 1}, {1.0, 1i});
  const CTensor c = Matmul(a, b);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.item(), 2i);
}

TEST(CTensorTest, MatmulContractsLastWithFirstAxis) {
  Rng rng(3);
  const CTensor a = RandomTensor({2, 3, 4}, rng);
  const CTensor b = RandomTensor({4, 5}, rng);
  const CTensor c = Matmul(a, b);
  ASSERT_EQ(c.shape(), (Shape{2, 3, 5}));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t k = 0; k < 5; ++k) {
      cplx s = 0;
      for (std::size_t j = 0; j < 4; ++j) s += a[i * 4 + j] * b[j * 5 + k];
      EXPECT_NEAR(std::abs(c[i * 5 + k] - s), 0.0, 1e-13);
    }
  }
  // vector . vector
  const CTensor u = CTensor::Vector({1.0, 2.0});
  EXPECT_EQ(Matmul(u, u).item(), 5.0 + 0i);
}

TEST(CTensorTest, ReshapeKeepsData) {
  const CTensor t({2, 3}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  const CTensor r = Reshape(t, {3, 2});
  EXPECT_EQ(r.shape(), (Shape{3, 2}));
  EXPECT_TRUE(std::equal(r.data().begin(), r.data().end(), t.data().begin()));
}

TEST(CTensorTest, L2NormExamples) {
  EXPECT_EQ(L2Norm(CTensor::Vector({3.0 + 4i})), 5.0);
  EXPECT_NEAR(L2Norm(CTensor::Vector({1.0, 1i})), std::sqrt(2.0), 1e-15);
}

TEST(CTensorTest, L2NormMatchesComponentwiseSum) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const CTensor t = RandomTensor({1 + rng.UniformInt(30)}, rng);
    long double s = 0;
    for (cplx z : t.data()) {
      s += static_cast<long double>(z.real()) * z.real() + static_cast<long double>(z.imag()) * z.imag();
    }
    EXPECT_NEAR(SquaredNorm(t) / static_cast<double>(s), 1.0, 1e-12);
  }
}

TEST(CTensorTest, NormIsNonnegativeAndZeroOnlyForZeros) {
  Rng rng(12);
  EXPECT_EQ(L2Norm(CTensor({4, 4})), 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    CTensor t({5});
    t[rng.UniformInt(5)] = rng.StandardNormalPair();
    EXPECT_GT(L2Norm(t), 0.0);
  }
}

TEST(CTensorTest, NormIsPhaseInvariant) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const CTensor t = RandomTensor({7}, rng);
    const cplx u = std::polar(1.0, 2 * std::numbers::pi * rng.Uniform());
    EXPECT_NEAR(L2Norm(Scale(t, u)) / L2Norm(t), 1.0, 1e-12);
  }
}

TEST(CTensorTest, OperationsKeepFiniteInputsFinite) {
  Rng rng(14);
  const CTensor a = RandomTensor({3, 3}, rng);
  const CTensor b = RandomTensor({3, 3}, rng);
  for (const CTensor& t : {Add(a, b), Sub(a, b), Mul(a, b), Matmul(a, b), Conj(a), Abs(a), Arg(a),
                           Scale(a, 2.0 - 1i), Arg(CTensor({3}))}) {
    EXPECT_TRUE(AllFinite(t));
  }
  CTensor bad({2});
  bad[1] = cplx(std::nan(""), 0);
  EXPECT_FALSE(AllFinite(bad));
}

TEST(DftTest, ConstantSignal) {
  const CTensor x = CTensor::Vector({1.0, 1.0, 1.0, 1.0});
  const CTensor f = Dft1d(x, 2);
  ASSERT_EQ(f.shape(), (Shape{2}));
  EXPECT_NEAR(std::abs(f[0] - 4.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(f[1]), 0.0, 1e-15);
}

TEST(DftTest, UnitImpulse) {
  const CTensor f = Dft1d(CTensor::Vector({1.0, 0.0, 0.0, 0.0}), 4);
  for (cplx z : f.data()) EXPECT_NEAR(std::abs(z - 1.0), 0.0, 1e-15);
}

TEST(DftTest, MatchesNaiveOracle) {
  Rng rng(15);
  for (std::size_t n : {8u, 5u, 16u, 31u}) {
    const CTensor x = RandomTensor({n}, rng);
    const std::vector<cplx> ref = oracle::NaiveDft({x.data().begin(), x.data().end()}, n);
    const CTensor f = Dft1d(x, n);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(std::abs(f[k] - ref[k]), 0.0, 1e-10);
  }
}

TEST(DftTest, KeepOutOfRange) {
  EXPECT_THROW(Dft1d(CTensor({4}), 5), DomainError);
  EXPECT_THROW(Dft1d(CTensor({4}), 0), DomainError);
  EXPECT_THROW(Dft1d(CTensor({2, 2}), 1), DomainError);
}

TEST(SamplerTest, RejectsNonPositiveVariance) {
  Rng rng(1);
  EXPECT_THROW(SampleCircularGaussian({3}, 0.0, rng), DomainError);
  EXPECT_THROW(SampleCircularGaussian({3}, -1.0, rng), DomainError);
}

TEST(SamplerTest, ComponentVarianceIsHalf) {
  // shape [4], sigma^2 = 2: each component has variance 1.
  Rng rng(2);
  double s_re = 0, s_im = 0, s2_re = 0, s2_im = 0;
  const int reps = 50000;
  for (int r = 0; r < reps; ++r) {
    const CTensor t = SampleCircularGaussian({4}, 2.0, rng);
    for (cplx z : t.data()) {
      s_re += z.real() * z.real();
      s_im += z.imag() * z.imag();
      s2_re += std::pow(z.real(), 4);
      s2_im += std::pow(z.imag(), 4);
    }
  }
  const double n = 4.0 * reps;
  const double v_re = s_re / n, v_im = s_im / n;
  const double se_re = std::sqrt((s2_re / n - v_re * v_re) / n);
  const double se_im = std::sqrt((s2_im / n - v_im * v_im) / n);
  EXPECT_NEAR(v_re, 1.0, 4 * se_re);
  EXPECT_NEAR(v_im, 1.0, 4 * se_im);
}

TEST(SamplerTest, VanishingVarianceGivesZeros) {
  Rng rng(3);
  const CTensor t = SampleCircularGaussian({100}, 1e-300, rng);
  for (cplx z : t.data()) EXPECT_LT(std::abs(z), 1e-148);
}

TEST(SamplerTest, PseudoVarianceAndPowerAtOneMillion) {
  Rng rng(4);
  const std::size_t n = 1000000;
  const CTensor t = SampleCircularGaussian({n}, 1.0, rng);
  cplx pseudo = 0;
  double power = 0, cov = 0, vre = 0, vim = 0;
  for (cplx z : t.data()) {
    pseudo += z * z;
    power += std::norm(z);
    cov += z.real() * z.imag();
    vre += z.real() * z.real();
    vim += z.imag() * z.imag();
  }
  const double nn = static_cast<double>(n);
  EXPECT_LT(std::abs(pseudo / nn), 4.0 / std::sqrt(nn));
  EXPECT_NEAR(power / nn, 1.0, 4.0 / std::sqrt(nn));
  // SE of a variance estimate of N(0, 1/2): sqrt(2 * 0.25 / n); of the
  // covariance: 0.5 / sqrt(n).
  EXPECT_NEAR(vre / nn, 0.5, 4.0 * std::sqrt(0.5 / nn));
  EXPECT_NEAR(vim / nn, 0.5, 4.0 * std::sqrt(0.5 / nn));
  EXPECT_NEAR(cov / nn, 0.0, 4.0 * 0.5 / std::sqrt(nn));
}

TEST(SamplerTest, EqualStateIsBitIdentical) {
  Rng a(99, 7), b(99, 7);
  EXPECT_EQ(SampleCircularGaussian({64}, 1.5, a), SampleCircularGaussian({64}, 1.5, b));
  EXPECT_EQ(a.counter(), b.counter());
  Rng c(99, 8);
  Rng d(99, 7);
  EXPECT_NE(SampleCircularGaussian({64}, 1.5, c), SampleCircularGaussian({64}, 1.5, d));
}

TEST(RngTest, SequenceIsPureFunctionOfSeedAndCounter) {
  Rng a(5);
  std::vector<std::uint64_t> first;
  for (int i = 0; i < 10; ++i) first.push_back(a.NextU64());
  Rng b(5, 4);
  for (int i = 4; i < 10; ++i) EXPECT_EQ(b.NextU64(), first[i]);
}

TEST(RngTest, PinnedValues) {
  // Guards against accidental changes to the generator.
  Rng a(0);
  const std::uint64_t x0 = a.NextU64();
  Rng b(0);
  EXPECT_EQ(b.NextU64(), x0);
  EXPECT_EQ(Rng::Mix(0), 0u);
  EXPECT_EQ(Rng::Mix(1), 0x5692161d100b05e5ULL);
}

TEST(RngTest, RangesAndStreams) {
  Rng r(6);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.Uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double v = r.UniformOpenZero();
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
    const std::uint64_t k = r.UniformInt(7);
    EXPECT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
  Rng s1 = Rng::Stream(1, 0), s2 = Rng::Stream(1, 1), s3 = Rng::Stream(1, 0);
  const std::uint64_t a = s1.NextU64();
  EXPECT_NE(a, s2.NextU64());
  EXPECT_EQ(a, s3.NextU64());
}

}  // namespace
}  // namespace zdp
