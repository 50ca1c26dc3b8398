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

#ifndef ZDP_DATA_H_
#define ZDP_DATA_H_

// ZDPC, a little-endian container for labelled complex tensors:
//
//   offset  size          field
//   0       4             magic "ZDPC"
//   4       2             version (u16) = 1
//   6       8             example count N (u64)
//   14      2             class count C (u16)
//   16      1             rank R (u8), >= 1
//   17      8 * R         dims (u64 each, >= 1)
//   ..      2 * N         labels (u16 each, < C)
//   ..      16 * N * prod(dims)   payload, (re f64, im f64) interleaved
//
// Nothing may follow the payload.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "zdp/ctensor.h"
#include "zdp/error.h"
#include "zdp/rng.h"

namespace zdp {

static_assert(std::endian::native == std::endian::little,
              "ZDPC I/O assumes a little-endian host");

struct ComplexDataset {
  std::vector<CTensor> examples;
  std::vector<int> labels;
  std::size_t num_classes = 2;

  std::size_t size() const { return examples.size(); }
  const Shape& example_shape() const { return examples.front().shape(); }
};

inline void Validate(const ComplexDataset& d) {
  if (d.num_classes < 2) throw DomainError("dataset needs >= 2 classes");
  if (d.examples.size() != d.labels.size()) {
    throw DomainError("dataset has " + std::to_string(d.examples.size()) + " examples but " +
                      std::to_string(d.labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    if (d.examples[i].shape() != d.examples.front().shape()) {
      throw DomainError("dataset examples differ in shape");
    }
    if (d.labels[i] < 0 || static_cast<std::size_t>(d.labels[i]) >= d.num_classes) {
      throw DomainError("label out of range at example " + std::to_string(i));
    }
  }
}

inline constexpr char kZdpcMagic[4] = {'Z', 'D', 'P', 'C'};
inline constexpr std::uint16_t kZdpcVersion = 1;

namespace internal {

template <typename T>
void PutLe(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T Get(const char* field) {
    Need(sizeof(T), field);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void Need(std::uint64_t n, const char* field) const {
    if (n > bytes_.size() - pos_) {
      throw FormatError(FormatError::Category::kTruncated, pos_,
                        std::string("truncated while reading ") + field);
    }
  }

  std::uint64_t pos() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }
  const std::uint8_t* here() const { return bytes_.data() + pos_; }
  void Skip(std::uint64_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::uint64_t pos_ = 0;
};

// a * b, or nullopt-like false on overflow.
inline bool MulOverflows(std::uint64_t a, std::uint64_t b, std::uint64_t* out) {
  return __builtin_mul_overflow(a, b, out);
}

}  // namespace internal

// Serializes examples with a common shape. Class count and labels must fit
// in u16.
inline std::vector<std::uint8_t> EncodeZdpc(std::span<const CTensor> examples,
                                            std::span<const int> labels,
                                            std::size_t num_classes) {
  if (examples.size() != labels.size()) throw DomainError("examples and labels differ in count");
  if (examples.empty()) throw DomainError("cannot encode an empty dataset");
  if (num_classes == 0 || num_classes > 0xffff) throw DomainError("class count must fit in u16");
  const Shape& shape = examples.front().shape();
  if (shape.size() > 0xff) throw DomainError("rank must fit in u8");
  std::vector<std::uint8_t> out;
  out.insert(out.end(), std::begin(kZdpcMagic), std::end(kZdpcMagic));
  internal::PutLe<std::uint16_t>(out, kZdpcVersion);
  internal::PutLe<std::uint64_t>(out, examples.size());
  internal::PutLe<std::uint16_t>(out, static_cast<std::uint16_t>(num_classes));
  internal::PutLe<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) internal::PutLe<std::uint64_t>(out, d);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) throw DomainError("label out of range");
    internal::PutLe<std::uint16_t>(out, static_cast<std::uint16_t>(l));
  }
  const std::size_t per = NumElements(shape);
  out.reserve(out.size() + examples.size() * per * 16);
  for (const CTensor& t : examples) {
    if (t.shape() != shape) throw DomainError("examples differ in shape");
    const auto* raw = reinterpret_cast<const std::uint8_t*>(t.data().data());
    out.insert(out.end(), raw, raw + per * sizeof(cplx));
  }
  return out;
}

struct DecodedZdpc {
  std::vector<CTensor> examples;
  std::vector<int> labels;
  std::size_t num_classes = 0;
};

inline DecodedZdpc DecodeZdpc(std::span<const std::uint8_t> bytes) {
  using Cat = FormatError::Category;
  internal::ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kZdpcMagic, 4) != 0) {
    throw FormatError(Cat::kBadMagic, 0, "bad magic");
  }
  r.Skip(4);
  const std::uint64_t version_at = r.pos();
  if (r.Get<std::uint16_t>("version") != kZdpcVersion) {
    throw FormatError(Cat::kBadVersion, version_at, "unsupported version");
  }
  const std::uint64_t count = r.Get<std::uint64_t>("example count");
  const std::uint64_t classes_at = r.pos();
  const std::uint16_t classes = r.Get<std::uint16_t>("class count");
  if (classes == 0) throw FormatError(Cat::kBadClassCount, classes_at, "class count is zero");
  const std::uint64_t rank_at = r.pos();
  const std::uint8_t rank = r.Get<std::uint8_t>("rank");
  if (rank == 0) throw FormatError(Cat::kBadRank, rank_at, "rank is zero");
  Shape shape;
  std::uint64_t per_example = 1;
  for (std::uint8_t i = 0; i < rank; ++i) {
    const std::uint64_t at = r.pos();
    const std::uint64_t d = r.Get<std::uint64_t>("dims");
    if (d == 0) throw FormatError(Cat::kBadDimension, at, "zero dimension");
    if (internal::MulOverflows(per_example, d, &per_example)) {
      throw FormatError(Cat::kSizeOverflow, at, "tensor size overflows");
    }
    shape.push_back(static_cast<std::size_t>(d));
  }
  std::uint64_t label_bytes = 0;
  if (internal::MulOverflows(count, 2, &label_bytes)) {
    throw FormatError(Cat::kSizeOverflow, r.pos(), "label block size overflows");
  }
  r.Need(label_bytes, "labels");
  std::uint64_t payload_scalars = 0, payload_bytes = 0;
  if (internal::MulOverflows(count, per_example, &payload_scalars) ||
      internal::MulOverflows(payload_scalars, 16, &payload_bytes)) {
    throw FormatError(Cat::kSizeOverflow, r.pos(), "payload size overflows");
  }
  // Size first: with a short payload, later "labels" would be payload bytes.
  if (r.remaining() - label_bytes < payload_bytes) {
    throw FormatError(Cat::kTruncated, r.pos() + label_bytes, "payload truncated");
  }
  DecodedZdpc out;
  out.num_classes = classes;
  out.labels.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t at = r.pos();
    const std::uint16_t l = r.Get<std::uint16_t>("labels");
    if (l >= classes) throw FormatError(Cat::kLabelOutOfRange, at, "label out of range");
    out.labels.push_back(l);
  }
  r.Need(payload_bytes, "payload");
  out.examples.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::vector<cplx> data(per_example);
    std::memcpy(data.data(), r.here(), per_example * sizeof(cplx));
    r.Skip(per_example * sizeof(cplx));
    out.examples.emplace_back(shape, std::move(data));
  }
  if (r.remaining() != 0) {
    throw FormatError(Cat::kTrailingData, r.pos(), "trailing bytes after payload");
  }
  return out;
}

inline std::vector<std::uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Category::kIo, 0, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void WriteFileBytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Category::kIo, 0, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Category::kIo, 0, "write failed for " + path);
}

inline void SaveZdpc(const std::string& path, const ComplexDataset& d) {
  Validate(d);
  WriteFileBytes(path, EncodeZdpc(d.examples, d.labels, d.num_classes));
}

inline ComplexDataset LoadZdpc(const std::string& path) {
  DecodedZdpc dec = DecodeZdpc(ReadFileBytes(path));
  ComplexDataset d{std::move(dec.examples), std::move(dec.labels), dec.num_classes};
  Validate(d);
  return d;
}

// Paired-prototype task: class c has re ~ P_c and im ~ P_{9-c}, with P_k the
// k-th standard basis vector of R^dim. Labels follow the real part.
inline constexpr std::size_t kPairedClasses = 10;

inline std::size_t ImaginaryPrototypeIndex(std::size_t label) {
  return kPairedClasses - 1 - label;
}

inline ComplexDataset GenPairedPrototypes(std::size_t n_per_class, double noise_std, Rng& rng,
                                          std::size_t dim = 16) {
  if (noise_std < 0.0) throw DomainError("noise_std must be >= 0");
  if (dim < kPairedClasses) throw DomainError("paired prototypes need dim >= 10");
  ComplexDataset d;
  d.num_classes = kPairedClasses;
  for (std::size_t c = 0; c < kPairedClasses; ++c) {
    for (std::size_t n = 0; n < n_per_class; ++n) {
      CTensor x({dim});
      for (std::size_t j = 0; j < dim; ++j) {
        const double re = j == c ? 1.0 : 0.0;
        const double im = j == ImaginaryPrototypeIndex(c) ? 1.0 : 0.0;
        const cplx noise = noise_std > 0.0 ? noise_std * rng.StandardNormalPair() : cplx{};
        x[j] = cplx(re, im) + noise;
      }
      d.examples.push_back(std::move(x));
      d.labels.push_back(static_cast<int>(c));
    }
  }
  return d;
}

// Class means are separation * u_c with u_c uniform on the unit sphere of
// C^dim; samples add circular Gaussian noise with E|n|^2 = 1 per entry.
// The means are the first draws of the stream, so train and test splits
// generated with the same seed share them (see GenComplexBlobsSplit).
inline std::vector<CTensor> BlobMeans(std::size_t classes, std::size_t dim, double separation,
                                      Rng& rng) {
  std::vector<CTensor> means;
  for (std::size_t c = 0; c < classes; ++c) {
    CTensor u = SampleCircularGaussian({dim}, 1.0, rng);
    means.push_back(Scale(u, separation / L2Norm(u)));
  }
  return means;
}

inline ComplexDataset BlobsFromMeans(const std::vector<CTensor>& means, std::size_t n_per_class,
                                     Rng& rng) {
  ComplexDataset d;
  d.num_classes = means.size();
  for (std::size_t n = 0; n < n_per_class; ++n) {
    for (std::size_t c = 0; c < means.size(); ++c) {
      d.examples.push_back(Add(means[c], SampleCircularGaussian(means[c].shape(), 1.0, rng)));
      d.labels.push_back(static_cast<int>(c));
    }
  }
  return d;
}

inline ComplexDataset GenComplexBlobs(std::size_t n_per_class, std::size_t classes,
                                      std::size_t dim, double separation, Rng& rng) {
  if (separation < 0.0) throw DomainError("separation must be >= 0");
  if (classes < 2 || dim == 0) throw DomainError("blobs need >= 2 classes and dim >= 1");
  return BlobsFromMeans(BlobMeans(classes, dim, separation, rng), n_per_class, rng);
}

struct DatasetSplit {
  ComplexDataset train;
  ComplexDataset test;
};

// Train and test drawn around the same class means.
inline DatasetSplit GenComplexBlobsSplit(std::size_t train_per_class, std::size_t test_per_class,
                                         std::size_t classes, std::size_t dim, double separation,
                                         Rng& rng) {
  if (separation < 0.0) throw DomainError("separation must be >= 0");
  if (classes < 2 || dim == 0) throw DomainError("blobs need >= 2 classes and dim >= 1");
  const std::vector<CTensor> means = BlobMeans(classes, dim, separation, rng);
  DatasetSplit s;
  s.train = BlobsFromMeans(means, train_per_class, rng);
  s.test = BlobsFromMeans(means, test_per_class, rng);
  return s;
}

// One real-valued signal of the Fourier task, split into its components.
struct FourierSignal {
  std::vector<double> clean;  // class-dependent low-band sinusoid mixture
  std::vector<double> noise;  // high-band sinusoids plus weak white noise
  int label = 0;
};

struct FourierTaskOptions {
  // Base frequencies in cycles per signal; the second harmonic is also present.
  double class0_frequency = 2.0;
  double class1_frequency = 5.0;
  double hf_amplitude = 1.0;
  double white_std = 0.05;
};

// Clean part: sin at the class frequency and a weaker second harmonic, each
// with a random phase. Noise: four sinusoids with frequencies drawn from
// [length/4, length/2) plus white noise.
inline FourierSignal GenFourierSignal(int label, std::size_t length, Rng& rng,
                                      const FourierTaskOptions& opts = {}) {
  FourierSignal s;
  s.label = label;
  s.clean.assign(length, 0.0);
  s.noise.assign(length, 0.0);
  const double f = label == 0 ? opts.class0_frequency : opts.class1_frequency;
  const double n = static_cast<double>(length);
  const double two_pi = 2.0 * std::numbers::pi;
  const double phase1 = two_pi * rng.Uniform();
  const double phase2 = two_pi * rng.Uniform();
  for (std::size_t t = 0; t < length; ++t) {
    const double x = two_pi * static_cast<double>(t) / n;
    s.clean[t] = std::sin(f * x + phase1) + 0.5 * std::sin(2.0 * f * x + phase2);
  }
  const std::size_t lo = length / 4;
  const std::size_t span = std::max<std::size_t>(1, length / 2 - lo);
  for (int k = 0; k < 4; ++k) {
    const double fk = static_cast<double>(lo + rng.UniformInt(span));
    const double ph = two_pi * rng.Uniform();
    const double amp = opts.hf_amplitude * (0.5 + rng.Uniform());
    for (std::size_t t = 0; t < length; ++t) {
      s.noise[t] += amp * std::sin(fk * two_pi * static_cast<double>(t) / n + ph);
    }
  }
  for (std::size_t t = 0; t < length; t += 2) {
    const cplx g = rng.StandardNormalPair();
    s.noise[t] += opts.white_std * g.real();
    if (t + 1 < length) s.noise[t + 1] += opts.white_std * g.imag();
  }
  return s;
}

// Features are Dft1d(signal, keep) / sqrt(length).
inline CTensor FourierFeatures(std::span<const double> signal, std::size_t keep) {
  CTensor x({signal.size()});
  for (std::size_t t = 0; t < signal.size(); ++t) x[t] = signal[t];
  return Scale(Dft1d(x, keep), 1.0 / std::sqrt(static_cast<double>(signal.size())));
}

// Binary task: class 0 and class 1 differ in their low-band base frequency.
inline ComplexDataset GenFourierSignals(std::size_t n_per_class, std::size_t length,
                                        std::size_t keep, Rng& rng,
                                        const FourierTaskOptions& opts = {}) {
  if (length < 8) throw DomainError("fourier signals need length >= 8");
  if (keep == 0 || keep > length) throw DomainError("keep must be in [1, length]");
  ComplexDataset d;
  d.num_classes = 2;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (int label = 0; label < 2; ++label) {
      FourierSignal s = GenFourierSignal(label, length, rng, opts);
      std::vector<double> full(length);
      for (std::size_t t = 0; t < length; ++t) full[t] = s.clean[t] + s.noise[t];
      d.examples.push_back(FourierFeatures(full, keep));
      d.labels.push_back(label);
    }
  }
  return d;
}

}  // namespace zdp

#endif  // ZDP_DATA_H_
