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
#include <random>

#include "mfo/transport.hpp"
#include "support/oracles.hpp"
#include "support/toy_problem.hpp"

using mfo::Atom;
using mfo::EmpiricalMeasure;
using mfo::Metric;
using mfo::Space;
using mfo::Vector;
using toy::Scalar;
using toy::Vec2;

namespace {

EmpiricalMeasure OnX(const std::vector<Vector>& points, const std::vector<double>& w) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < points.size(); ++i) atoms.push_back(Atom{points[i], Vector(), w[i]});
  return EmpiricalMeasure(Space::kX, atoms);
}

std::vector<double> RandomWeights(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  double total = 0;
  for (double& v : w) total += (v = u(rng));
  for (double& v : w) v /= total;
  return w;
}

// d1 on the line as the integral of |F0 - F1|.
double CdfDistance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  std::vector<double> knots;
  for (const Atom& x : a.atoms()) knots.push_back(x.x[0]);
  for (const Atom& x : b.atoms()) knots.push_back(x.x[0]);
  std::sort(knots.begin(), knots.end());
  auto cdf = [](const EmpiricalMeasure& m, double t) {
    double s = 0;
    for (const Atom& x : m.atoms())
      if (x.x[0] <= t) s += x.w;
    return s;
  };
  double d = 0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    d += std::abs(cdf(a, knots[i]) - cdf(b, knots[i])) * (knots[i + 1] - knots[i]);
  return d;
}

}  // namespace

TEST_CASE("plan for identical measures is diagonal with zero cost") {
  const EmpiricalMeasure m = OnX({Scalar(0), Scalar(1), Scalar(3)}, {0.2, 0.3, 0.5});
  for (const Metric& metric : {Metric::Euclidean(), Metric::Custom([](const Vector& a, const Vector& b) {
                                 return (a - b).norm();
                               })}) {
    const mfo::Coupling plan = mfo::OtSolve(m, m, metric);
    CHECK(plan.cost == doctest::Approx(0.0));
    for (const auto& e : plan.entries) CHECK(e.source == e.target);
  }
}

TEST_CASE("two atoms to two atoms") {
  const EmpiricalMeasure m0 = OnX({Scalar(0), Scalar(1)}, {0.5, 0.5});
  const EmpiricalMeasure m1 = OnX({Scalar(2), Scalar(3)}, {0.5, 0.5});
  CHECK(mfo::OtSolve(m0, m1, Metric::Euclidean()).cost == doctest::Approx(2.0));
  CHECK(mfo::OtSolveSimplex(m0, m1, Metric::Euclidean()).cost == doctest::Approx(2.0));
}

TEST_CASE("splitting a Dirac") {
  const EmpiricalMeasure m0 = OnX({Scalar(0)}, {1.0});
  const EmpiricalMeasure m1 = OnX({Scalar(-1), Scalar(2)}, {0.25, 0.75});
  const mfo::Coupling plan = mfo::OtSolve(m0, m1, Metric::Euclidean());
  CHECK(plan.cost == doctest::Approx(0.25 * 1 + 0.75 * 2));
  CHECK(plan.MarginalResidual() <= 1e-12);
}

TEST_CASE("line and simplex agree with the CDF formula on random supports") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n0 = 1 + trial % 7, n1 = 1 + (trial * 3) % 6;
    std::vector<Vector> p0, p1;
    for (int i = 0; i < n0; ++i) p0.push_back(Scalar(u(rng)));
    for (int i = 0; i < n1; ++i) p1.push_back(Scalar(u(rng)));
    const EmpiricalMeasure m0 = OnX(p0, RandomWeights(rng, n0));
    const EmpiricalMeasure m1 = OnX(p1, RandomWeights(rng, n1));
    const double expected = CdfDistance(m0, m1);
    const mfo::Coupling line = mfo::OtSolveLine(m0, m1);
    const mfo::Coupling simplex = mfo::OtSolveSimplex(m0, m1, Metric::Euclidean());
    CHECK(std::abs(line.cost - expected) <= 1e-12);
    CHECK(std::abs(simplex.cost - expected) <= 1e-12);
    CHECK(line.MarginalResidual() <= 1e-9);
    CHECK(simplex.MarginalResidual() <= 1e-9);
    for (const auto& e : simplex.entries) CHECK(e.mass > 0.0);
  }
}

TEST_CASE("uniform measures match the permutation minimum") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  const oracle::DistFn euclid = [](const oracle::Vec& a, const oracle::Vec& b) { return (a - b).norm(); };
  for (int n = 1; n <= 7; ++n) {
    for (int dim : {1, 2}) {
      std::vector<Vector> a, b;
      for (int i = 0; i < n; ++i) {
        a.push_back(dim == 1 ? Scalar(g(rng)) : Vec2(g(rng), g(rng)));
        b.push_back(dim == 1 ? Scalar(g(rng)) : Vec2(g(rng), g(rng)));
      }
      const std::vector<double> w(n, 1.0 / n);
      const double expected = oracle::PermutationMinimum(a, b, euclid);
      CHECK(std::abs(mfo::OtSolve(OnX(a, w), OnX(b, w), Metric::Euclidean()).cost - expected) <= 1e-12);
      CHECK(std::abs(mfo::AssignmentSolve(OnX(a, w), OnX(b, w), Metric::Euclidean()).cost - expected) <= 1e-12);
    }
  }
}

TEST_CASE("assignment returns a permutation with the reported cost") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 12;
  std::vector<Vector> a, b;
  for (int i = 0; i < n; ++i) {
    a.push_back(Vec2(u(rng), u(rng)));
    b.push_back(Vec2(u(rng), u(rng)));
  }
  const std::vector<double> w(n, 1.0 / n);
  const mfo::Assignment out = mfo::AssignmentSolve(OnX(a, w), OnX(b, w), Metric::Euclidean());
  std::vector<std::size_t> sorted = out.permutation;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i) CHECK(sorted[i] == static_cast<std::size_t>(i));
  double cost = 0;
  for (int i = 0; i < n; ++i) cost += (a[i] - b[out.permutation[i]]).norm() / n;
  CHECK(cost == doctest::Approx(out.cost).epsilon(1e-12));
  CHECK(std::abs(out.cost - mfo::OtSolveSimplex(OnX(a, w), OnX(b, w), Metric::Euclidean()).cost) <= 1e-12);
  CHECK_THROWS_AS(mfo::AssignmentSolve(OnX({a[0], a[1]}, {0.3, 0.7}), OnX({b[0], b[1]}, {0.5, 0.5}),
                                       Metric::Euclidean()),
                  mfo::MfoError);
}

TEST_CASE("graph hop metric uses the simplex") {
  Eigen::MatrixXd hops(3, 3);
  hops << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  const EmpiricalMeasure m0 = OnX({Scalar(0), Scalar(1)}, {0.5, 0.5});
  const EmpiricalMeasure m1 = OnX({Scalar(2)}, {1.0});
  CHECK(mfo::OtSolve(m0, m1, Metric::GraphHop(hops)).cost == doctest::Approx(1.5));
}

TEST_CASE("glue and projections") {
  const EmpiricalMeasure mu0(Space::kZ, {Atom{Scalar(0), Scalar(1), 0.3}, Atom{Scalar(0), Scalar(2), 0.2},
                                         Atom{Scalar(1), Scalar(5), 0.5}});
  const EmpiricalMeasure m1 = OnX({Scalar(0.5), Scalar(2)}, {0.6, 0.4});
  const mfo::Coupling rho = mfo::OtSolve(mfo::FirstMarginal(mu0), m1, Metric::Euclidean());
  const mfo::GluedMeasure nu = mfo::Glue(mu0, rho);
  const EmpiricalMeasure z = nu.ProjectZ();
  const EmpiricalMeasure target = nu.ProjectTarget();
  for (const Atom& a : mu0.atoms()) {
    double w = 0;
    for (const Atom& b : z.atoms())
      if (mfo::NearlyEqual(a.x, b.x) && mfo::NearlyEqual(a.y, b.y)) w += b.w;
    CHECK(std::abs(w - a.w) <= 1e-12);
  }
  for (const Atom& a : m1.atoms()) {
    double w = 0;
    for (const Atom& b : target.atoms())
      if (mfo::NearlyEqual(a.x, b.x)) w += b.w;
    CHECK(std::abs(w - a.w) <= 1e-12);
  }
  const EmpiricalMeasure wrong = OnX({Scalar(7)}, {1.0});
  CHECK_THROWS_AS(mfo::Glue(mu0, mfo::OtSolve(wrong, m1, Metric::Euclidean())), mfo::MfoError);
}

TEST_CASE("bridge lands on the target marginal with feasible decisions") {
  // Decision 0 or 1 for integer parameters 0..3; identical lists per label.
  std::map<int, std::vector<Vector>> choices;
  for (int x = 0; x < 4; ++x) choices[x] = {Scalar(0), Scalar(1)};
  const toy::FiniteChoiceProblem problem(choices, toy::FiniteChoiceProblem::Objective::kQuadratic, Scalar(0.3));
  const EmpiricalMeasure mu0(Space::kZ, {Atom{Scalar(0), Scalar(1), 0.5}, Atom{Scalar(1), Scalar(0), 0.5}});
  const EmpiricalMeasure m1 = OnX({Scalar(2), Scalar(3)}, {0.5, 0.5});
  const mfo::BridgeResult out = mfo::Bridge(mu0, m1, problem);
  CHECK(out.d1 == doctest::Approx(2.0));
  const EmpiricalMeasure marg = mfo::FirstMarginal(out.measure);
  CHECK(marg.size() == 2);
  for (const Atom& a : out.measure.atoms()) CHECK(problem.feasible(a.x, a.y));
  CHECK(mfo::ToJson(out.coupling)["entries"].size() == out.coupling.entries.size());
}
