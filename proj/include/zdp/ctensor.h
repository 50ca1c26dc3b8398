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

#ifndef ZDP_CTENSOR_H_
#define ZDP_CTENSOR_H_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "zdp/error.h"
#include "zdp/rng.h"

namespace zdp {

using cplx = std::complex<double>;
using Shape = std::vector<std::size_t>;

inline std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline void ValidateShape(const Shape& shape) {
  if (shape.empty()) throw DomainError("tensor shape must have rank >= 1");
  for (std::size_t d : shape) {
    if (d == 0) throw DomainError("tensor dimension must be >= 1");
  }
}

// Dense row-major tensor of complex doubles. std::complex<double> is layout
// compatible with double[2], so the storage is interleaved (re, im).
class CTensor {
 public:
  CTensor() : shape_{1}, data_(1) {}

  explicit CTensor(Shape shape) : shape_(std::move(shape)) {
    ValidateShape(shape_);
    data_.assign(NumElements(shape_), cplx{});
  }

  CTensor(Shape shape, std::vector<cplx> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    ValidateShape(shape_);
    if (data_.size() != NumElements(shape_)) {
      throw DomainError("data length " + std::to_string(data_.size()) +
                        " does not match shape " + ShapeString(shape_));
    }
  }

  static CTensor Scalar(cplx value) { return CTensor({1}, {value}); }
  static CTensor Vector(std::initializer_list<cplx> values) {
    return CTensor({values.size()}, std::vector<cplx>(values));
  }
  static CTensor Full(Shape shape, cplx value) {
    CTensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<const cplx> data() const { return data_; }
  std::span<cplx> mutable_data() { return data_; }

  const cplx& operator[](std::size_t i) const { return data_[i]; }
  cplx& operator[](std::size_t i) { return data_[i]; }

  // First element; the value of a single-element tensor.
  cplx item() const { return data_.front(); }

  bool operator==(const CTensor& other) const = default;

 private:
  Shape shape_;
  std::vector<cplx> data_;
};

inline bool AllFinite(const CTensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](cplx z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

namespace internal {

inline void RequireSameShape(const CTensor& a, const CTensor& b,
                             const char* op) {
  if (a.shape() != b.shape()) {
    throw DomainError(std::string(op) + ": shape mismatch " +
                      ShapeString(a.shape()) + " vs " +
                      ShapeString(b.shape()));
  }
}

template <typename F>
CTensor Map(const CTensor& a, F f) {
  CTensor out(a.shape());
  auto dst = out.mutable_data();
  auto src = a.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
CTensor Zip(const CTensor& a, const CTensor& b, const char* op, F f) {
  RequireSameShape(a, b, op);
  CTensor out(a.shape());
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = f(a[i], b[i]);
  return out;
}

}  // namespace internal

inline CTensor Add(const CTensor& a, const CTensor& b) {
  return internal::Zip(a, b, "add", std::plus<cplx>());
}
inline CTensor Sub(const CTensor& a, const CTensor& b) {
  return internal::Zip(a, b, "sub", std::minus<cplx>());
}
// Hadamard product.
inline CTensor Mul(const CTensor& a, const CTensor& b) {
  return internal::Zip(a, b, "mul", std::multiplies<cplx>());
}
inline CTensor Scale(const CTensor& a, cplx s) {
  return internal::Map(a, [s](cplx z) { return s * z; });
}
inline CTensor Conj(const CTensor& a) {
  return internal::Map(a, [](cplx z) { return std::conj(z); });
}
// |z| per entry, stored with zero imaginary part.
inline CTensor Abs(const CTensor& a) {
  return internal::Map(a, [](cplx z) { return cplx(std::abs(z), 0.0); });
}

// arg(0) is 0 so phase-based code never sees NaN.
inline double SafeArg(cplx z) {
  if (z.real() == 0.0 && z.imag() == 0.0) return 0.0;
  return std::arg(z);
}
inline CTensor Arg(const CTensor& a) {
  return internal::Map(a, [](cplx z) { return cplx(SafeArg(z), 0.0); });
}

inline CTensor Reshape(const CTensor& a, Shape shape) {
  ValidateShape(shape);
  if (NumElements(shape) != a.size()) {
    throw DomainError("reshape: cannot view " + ShapeString(a.shape()) +
                      " as " + ShapeString(shape));
  }
  auto d = a.data();
  return CTensor(std::move(shape), std::vector<cplx>(d.begin(), d.end()));
}

// Contracts the last axis of `a` with the first axis of `b`. The result
// shape is a.shape[:-1] ++ b.shape[1:], or [1] when both are vectors.
inline CTensor Matmul(const CTensor& a, const CTensor& b) {
  const std::size_t k = a.shape().back();
  if (b.shape().front() != k) {
    throw DomainError("matmul: inner dimensions differ " +
                      ShapeString(a.shape()) + " . " + ShapeString(b.shape()));
  }
  const std::size_t m = a.size() / k;
  const std::size_t n = b.size() / k;
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.insert(out_shape.end(), b.shape().begin() + 1, b.shape().end());
  if (out_shape.empty()) out_shape.push_back(1);
  CTensor out(out_shape);
  auto o = out.mutable_data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const cplx aip = ad[i * k + p];
      const cplx* brow = &bd[p * n];
      cplx* orow = &o[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

// Sum of z * conj(z) over all entries.
inline double SquaredNorm(const CTensor& t) {
  double s = 0.0;
  for (cplx z : t.data()) s += std::norm(z);
  return s;
}

// Hermitian L2 norm, sqrt(sum z conj(z)).
inline double L2Norm(const CTensor& t) { return std::sqrt(SquaredNorm(t)); }

// First `keep` coefficients of X_k = sum_n x_n exp(-2 pi i k n / N).
inline CTensor Dft1d(const CTensor& signal, std::size_t keep) {
  if (signal.rank() != 1) throw DomainError("dft_1d: signal must be rank 1");
  const std::size_t n = signal.size();
  if (keep == 0 || keep > n) {
    throw DomainError("dft_1d: keep must be in [1, " + std::to_string(n) + "]");
  }
  CTensor out({keep});
  for (std::size_t k = 0; k < keep; ++k) {
    cplx acc{};
    for (std::size_t t = 0; t < n; ++t) {
      // Reduce k*t mod n first so the angle stays in [0, 2 pi).
      const double angle = -2.0 * std::numbers::pi *
                           static_cast<double>((k * t) % n) /
                           static_cast<double>(n);
      acc += signal[t] * cplx(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

// Circularly symmetric complex Gaussian with E|z|^2 = variance: re and im
// are independent N(0, variance / 2). One Box-Muller pair per entry, in
// row-major order.
inline CTensor SampleCircularGaussian(const Shape& shape, double variance,
                                      Rng& rng) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw DomainError("circular gaussian variance must be positive");
  }
  CTensor out(shape);
  const double component_std = std::sqrt(variance / 2.0);
  for (cplx& z : out.mutable_data()) z = component_std * rng.StandardNormalPair();
  return out;
}

}  // namespace zdp

#endif  // ZDP_CTENSOR_H_
