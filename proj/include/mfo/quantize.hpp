// Copyright 2026 The MFO Authors
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

// Replacing a continuous marginal by an N-point empirical measure, and
// Monte-Carlo estimates of the resulting d_1 error.

#ifndef MFO_QUANTIZE_HPP_
#define MFO_QUANTIZE_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfo/measures.hpp"

namespace mfo {

struct SourceDistribution {
  enum class Kind { kUniform, kExponential, kFinite };
  Kind kind = Kind::kUniform;
  double a = 0.0;     // uniform lower end
  double b = 1.0;     // uniform upper end
  double rate = 1.0;  // exponential rate
  EmpiricalMeasure finite;  // finite-sample source

  static SourceDistribution Uniform(double a, double b);
  static SourceDistribution Exponential(double rate);
  static SourceDistribution Finite(EmpiricalMeasure m);

  /// "uniform:a:b", "exponential:rate" or "file:<measure.json>".
  static SourceDistribution Parse(const std::string& spec);

  std::size_t dimension() const;
  void Validate() const;
  std::string ToString() const;
};

/// N i.i.d. draws with weight 1/N each.
EmpiricalMeasure QuantizeSample(const SourceDistribution& dist, std::size_t n,
                                std::uint64_t seed);

struct GridQuantization {
  EmpiricalMeasure measure;
  /// Probability mass cut off before renormalizing (exponential only).
  double truncated_mass = 0.0;
  /// Right end of the quantized support.
  double support_max = 0.0;
};

/// Atoms at the quantile midpoints F^{-1}((i + 1/2) / N), each of mass 1/N.
/// The exponential is first truncated at its 1 - 1/(4N) quantile.
GridQuantization QuantizeGrid(const SourceDistribution& dist, std::size_t n);

/// Exact d_1 between a one-dimensional uniform or exponential distribution
/// and a finitely supported m on the line, as the integral over u in (0, 1)
/// of |F^{-1}(u) - G^{-1}(u)|.
double D1ToContinuous(const SourceDistribution& dist, const EmpiricalMeasure& m);

struct D1Estimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t sample_size = 0;
  int resamples = 0;
};

/// Mean over 5 fresh samples of the exact d_1 between the sample and m_n.
D1Estimate EstimateD1(const SourceDistribution& dist, const EmpiricalMeasure& m_n,
                      std::size_t sample_size, std::uint64_t seed);

nlohmann::json ToJson(const D1Estimate& e);

}  // namespace mfo

#endif  // MFO_QUANTIZE_HPP_
