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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mfo/quantize.hpp"
#include "support/oracles.hpp"

using mfo::EmpiricalMeasure;
using mfo::SourceDistribution;

namespace {

// int_0^1 |F^{-1}(u) - G^{-1}(u)| du by the midpoint rule on the quantiles.
double QuantileQuadrature(const std::function<double(double)>& quantile, const EmpiricalMeasure& m,
                          int points = 1000000) {
  std::vector<std::pair<double, double>> atoms;
  for (const auto& a : m.atoms()) atoms.emplace_back(a.x[0], a.w);
  std::sort(atoms.begin(), atoms.end());
  double total = 0.0, cum = atoms[0].second;
  std::size_t k = 0;
  for (int i = 0; i < points; ++i) {
    const double u = (i + 0.5) / points;
    while (u > cum && k + 1 < atoms.size()) cum += atoms[++k].second;
    total += std::abs(quantile(u) - atoms[k].first) / points;
  }
  return total;
}

}  // namespace

TEST_CASE("distribution specs") {
  CHECK(SourceDistribution::Parse("uniform:0:2").b == 2.0);
  CHECK(SourceDistribution::Parse("exponential:1.5").rate == 1.5);
  CHECK_THROWS_AS(SourceDistribution::Parse("uniform:2:1"), mfo::MfoError);
  CHECK_THROWS_AS(SourceDistribution::Parse("exponential:-1"), mfo::MfoError);
  CHECK_THROWS_AS(SourceDistribution::Parse("gamma:1"), mfo::MfoError);
  CHECK_THROWS_AS(SourceDistribution::Parse("uniform:0:x"), mfo::MfoError);
  CHECK_THROWS_AS(SourceDistribution::Parse("file:/nonexistent/m.json"), mfo::MfoError);
}

TEST_CASE("finite source from a measure file") {
  const auto path = std::filesystem::temp_directory_path() / "mfo_quantize_finite.json";
  {
    std::ofstream out(path);
    out << R"({"space":"X","atoms":[{"x":[1.0],"w":0.25},{"x":[3.0],"w":0.75}]})";
  }
  const SourceDistribution d = SourceDistribution::Parse("file:" + path.string());
  CHECK(d.kind == SourceDistribution::Kind::kFinite);
  const EmpiricalMeasure s = mfo::QuantizeSample(d, 4000, 2);
  double threes = 0;
  for (const auto& a : s.atoms()) {
    CHECK((a.x[0] == 1.0 || a.x[0] == 3.0));
    threes += a.x[0] == 3.0 ? a.w : 0.0;
  }
  CHECK(std::abs(threes - 0.75) < 0.03);
  std::filesystem::remove(path);
}

TEST_CASE("sampling is seeded and has the right mean") {
  const SourceDistribution d = SourceDistribution::Exponential(2.0);
  const EmpiricalMeasure a = mfo::QuantizeSample(d, 20000, 5);
  const EmpiricalMeasure b = mfo::QuantizeSample(d, 20000, 5);
  double mean = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x[0] == b[i].x[0]);
    mean += a[i].x[0] * a[i].w;
  }
  CHECK(std::abs(mean - 0.5) < 0.02);
  CHECK(mfo::QuantizeSample(d, 10, 6)[0].x[0] != a[0].x[0]);
}

TEST_CASE("uniform grid sits at cell midpoints with d1 = (b - a) / 4N") {
  const SourceDistribution d = SourceDistribution::Uniform(-1.0, 3.0);
  for (std::size_t n : {1, 2, 3, 8, 50}) {
    const mfo::GridQuantization g = mfo::QuantizeGrid(d, n);
    CHECK(g.measure.size() == n);
    CHECK(g.truncated_mass == 0.0);
    CHECK(g.measure[0].x[0] == doctest::Approx(-1.0 + 2.0 / n));
    const double exact = 4.0 / (4.0 * n);
    CHECK(std::abs(mfo::D1ToContinuous(d, g.measure) - exact) <= 1e-12);
    const double quad = QuantileQuadrature([](double u) { return -1.0 + 4.0 * u; }, g.measure);
    CHECK(std::abs(quad - exact) <= 1e-6);
  }
}

TEST_CASE("exponential grid truncates the tail") {
  const SourceDistribution d = SourceDistribution::Exponential(0.5);
  for (std::size_t n : {1, 4, 16, 64}) {
    const mfo::GridQuantization g = mfo::QuantizeGrid(d, n);
    CHECK(g.truncated_mass == doctest::Approx(1.0 / (4.0 * n)));
    CHECK(g.support_max == doctest::Approx(-std::log(1.0 / (4.0 * n)) / 0.5));
    for (const auto& a : g.measure.atoms()) CHECK(a.x[0] <= g.support_max);
    const double quad = QuantileQuadrature([](double u) { return -std::log1p(-u) / 0.5; }, g.measure, 2000000);
    CHECK(std::abs(mfo::D1ToContinuous(d, g.measure) - quad) <= 2e-4);
  }
}

TEST_CASE("d1 to a continuous law for arbitrary measures") {
  const SourceDistribution u = SourceDistribution::Uniform(0.0, 1.0);
  const EmpiricalMeasure m(mfo::Space::kX, {mfo::Atom{mfo::Vector::Constant(1, 0.2), mfo::Vector(), 0.7},
                                            mfo::Atom{mfo::Vector::Constant(1, 1.5), mfo::Vector(), 0.3}});
  const double quad = QuantileQuadrature([](double p) { return p; }, m);
  CHECK(std::abs(mfo::D1ToContinuous(u, m) - quad) <= 1e-6);
  const SourceDistribution e = SourceDistribution::Exponential(1.0);
  const double quad_e = QuantileQuadrature([](double p) { return -std::log1p(-p); }, m, 2000000);
  CHECK(std::abs(mfo::D1ToContinuous(e, m) - quad_e) <= 1e-4);
}

TEST_CASE("sampled d1 estimate brackets the exact value") {
  const SourceDistribution d = SourceDistribution::Uniform(0.0, 1.0);
  const EmpiricalMeasure grid = mfo::QuantizeGrid(d, 4).measure;
  const mfo::D1Estimate e = mfo::EstimateD1(d, grid, 4000, 11);
  CHECK(e.resamples == 5);
  CHECK(e.standard_error > 0.0);
  // The sampled estimate is biased upward by O(n^-1/2).
  CHECK(e.estimate >= 1.0 / 16 - 3 * e.standard_error);
  CHECK(e.estimate <= 1.0 / 16 + 0.02);
  CHECK(mfo::ToJson(e).contains("stderr"));
  CHECK_THROWS_AS(mfo::EstimateD1(d, grid, 39, 1), mfo::MfoError);
}

TEST_CASE("quantization rate on the uniform law") {
  const SourceDistribution d = SourceDistribution::Uniform(0.0, 1.0);
  std::vector<double> ns, d1s;
  for (double n : {1, 2, 4, 8, 16}) {
    ns.push_back(n);
    d1s.push_back(mfo::D1ToContinuous(d, mfo::QuantizeGrid(d, static_cast<std::size_t>(n)).measure));
  }
  CHECK(oracle::LogLogSlope(ns, d1s) == doctest::Approx(-1.0).epsilon(1e-9));
}
