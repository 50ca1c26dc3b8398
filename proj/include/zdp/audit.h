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

#ifndef ZDP_AUDIT_H_
#define ZDP_AUDIT_H_

// Statistical audit of circularly symmetric complex Gaussian samples.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "zdp/ctensor.h"
#include "zdp/error.h"

namespace zdp {

struct AuditCheck {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double standard_error = 0.0;
  bool pass = false;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  bool pass() const {
    for (const AuditCheck& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
};

namespace internal {

// Mean of per-sample statistics with its standard error.
class StatMean {
 public:
  void Add(double v) {
    ++n_;
    s_ += v;
    s2_ += v * v;
  }
  double mean() const { return s_ / static_cast<double>(n_); }
  double se() const {
    const double n = static_cast<double>(n_);
    const double var = std::max(0.0, (s2_ - n * mean() * mean()) / (n - 1.0));
    return std::sqrt(var / n);
  }

 private:
  std::size_t n_ = 0;
  double s_ = 0.0;
  double s2_ = 0.0;
};

inline AuditCheck MakeCheck(std::string name, const StatMean& m, double expected,
                            double tolerance_se) {
  AuditCheck c{std::move(name), m.mean(), expected, m.se(), false};
  c.pass = std::abs(c.value - c.expected) <= tolerance_se * c.standard_error;
  return c;
}

}  // namespace internal

// Zero-mean checks for samples that should be N_C(0, variance): Var(re) and
// Var(im) equal variance / 2, Cov(re, im) = 0, pseudo-variance E[X^2] = 0
// and E|X|^2 = variance, each within `tolerance_se` standard errors.
inline AuditReport AuditCircularity(std::span<const cplx> samples, double variance,
                                    double tolerance_se = 4.0) {
  if (samples.size() < 2) throw DomainError("audit needs at least two samples");
  internal::StatMean var_re, var_im, cov, pseudo_re, pseudo_im, power;
  for (cplx z : samples) {
    const double a = z.real();
    const double b = z.imag();
    var_re.Add(a * a);
    var_im.Add(b * b);
    cov.Add(a * b);
    pseudo_re.Add(a * a - b * b);
    pseudo_im.Add(2.0 * a * b);
    power.Add(a * a + b * b);
  }
  AuditReport r;
  r.checks.push_back(internal::MakeCheck("var_re", var_re, variance / 2.0, tolerance_se));
  r.checks.push_back(internal::MakeCheck("var_im", var_im, variance / 2.0, tolerance_se));
  r.checks.push_back(internal::MakeCheck("cov_re_im", cov, 0.0, tolerance_se));
  r.checks.push_back(internal::MakeCheck("pseudo_var_re", pseudo_re, 0.0, tolerance_se));
  r.checks.push_back(internal::MakeCheck("pseudo_var_im", pseudo_im, 0.0, tolerance_se));
  r.checks.push_back(internal::MakeCheck("mean_power", power, variance, tolerance_se));
  return r;
}

}  // namespace zdp

#endif  // ZDP_AUDIT_H_
