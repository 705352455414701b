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

#include <random>

#include "mfo/examples/congestion.hpp"
#include "support/oracles.hpp"

using mfo::Aggregate;
using mfo::CongestionInstance;
using mfo::CongestionProblem;
using mfo::Vector;

namespace {

Vector Pos(double x) { return Vector::Constant(1, x); }

// Three time steps on a coarse grid: delta = 0.1, two grid steps per time step.
CongestionInstance Tiny() {
  CongestionInstance inst;
  inst.horizon = 0.3;
  inst.steps = 3;
  inst.max_speed = 2.0;
  inst.cells = 2;
  inst.smoothing = 8.0;
  inst.grid_max = 1.2;
  inst.grid_points = 13;
  return inst;
}

Aggregate RandomLambda(std::mt19937_64& rng, const CongestionProblem& p) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(p.inner_weights()->size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  v[0] = 1.0;
  return Aggregate(v, p.inner_weights());
}

}  // namespace

TEST_CASE("instance defaults") {
  const CongestionInstance inst;
  CHECK(inst.delta() == doctest::Approx(0.003));
  CHECK(inst.MaxShift() == 50);
  CHECK(inst.dx() == doctest::Approx(0.2));
  const CongestionProblem p{inst};
  CHECK(p.GridCap(0.0) == 400);
  CHECK(p.GridCap(0.2) == 333);
  CHECK(mfo::CongestionInstanceFromJson(mfo::ToJson(inst)).grid_points == 401);
  CHECK_THROWS_AS(mfo::CongestionInstanceFromJson({{"speed", 1.0}}), mfo::MfoError);
  CHECK_THROWS_AS(mfo::CongestionInstanceFromJson({{"grid_max", 0.9}}), mfo::MfoError);
}

TEST_CASE("smooth step") {
  CHECK(mfo::SmoothStep(-0.1, 20) == 0.0);
  CHECK(mfo::SmoothStep(0.05, 20) == 1.0);
  CHECK(mfo::SmoothStep(0.025, 20) == doctest::Approx(0.5));
  // Largest slope by finite differences on a fine grid.
  for (double k : {5.0, 20.0, 50.0}) {
    double slope = 0;
    const int n = 400000;
    for (int i = 1; i < n; ++i) {
      const double x = i / (k * n), h = 1e-3 / (k * n);
      slope = std::max(slope, (mfo::SmoothStep(x + h, k) - mfo::SmoothStep(x - h, k)) / (2 * h));
    }
    CHECK(mfo::SmoothStepSlope(k) >= slope);
    CHECK(mfo::SmoothStepSlope(k) <= slope * (1 + 1e-4));
    CHECK(mfo::SmoothStepSlope(k) == doctest::Approx(2 * k).epsilon(1e-6));
  }
}

TEST_CASE("cell bumps partition the occupied indicator") {
  for (int cells : {1, 3, 5}) {
    const double k = 4.0 * cells;
    double worst = 0;
    for (int i = 0; i <= 10000; ++i) {
      const double x = 1.2 * i / 10000.0;
      const Vector h = mfo::CongestionBumps(x, cells, k);
      worst = std::max(worst, std::abs(h.tail(cells).sum() - h[0]));
      CHECK(h.minCoeff() >= 0.0);
      CHECK(h.maxCoeff() <= 1.0);
    }
    CHECK(worst <= 1e-12);
  }
  CHECK(mfo::CongestionBumps(1.1, 5, 20).isZero());
  CHECK(mfo::CongestionBumps(0.5, 5, 20)[0] == 1.0);
}

TEST_CASE("best response matches exhaustive search over grid paths") {
  const CongestionProblem p{Tiny()};
  REQUIRE(p.instance().MaxShift() == 2);
  std::mt19937_64 rng(12);
  for (double x : {0.0, 0.35, 0.75, 0.95}) {
    const int cap = p.GridCap(x);
    for (int trial = 0; trial < 25; ++trial) {
      const Aggregate lambda = RandomLambda(rng, p);
      double best = std::numeric_limits<double>::infinity();
      int count = 0;
      oracle::ForEachGridPath(3, 2, cap, [&](const std::vector<int>& path) {
        Vector gamma(4);
        for (int t = 0; t <= 3; ++t) gamma[t] = x + path[t] * p.instance().delta();
        best = std::min(best, mfo::Inner(lambda, p.g_eval(Pos(x), gamma)));
        ++count;
      });
      CHECK(count > 1);
      const Vector br = p.best_response(lambda, Pos(x));
      CHECK(p.feasible(Pos(x), br));
      CHECK(std::abs(mfo::Inner(lambda, p.g_eval(Pos(x), br)) - best) <= 1e-12);
    }
  }
}

TEST_CASE("without congestion cost every agent drives at full speed") {
  CongestionInstance inst;
  inst.penalty = 0.0;
  const CongestionProblem p{inst};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (int trial = 0; trial < 10; ++trial) {
    const double x = u(rng);
    Aggregate beta = Aggregate::Zero(p.inner_weights());
    const Aggregate lambda = p.f_grad(beta);
    const Vector br = p.best_response(lambda, Pos(x));
    CHECK((br - p.MaxSpeedTrajectory(x)).cwiseAbs().maxCoeff() == 0.0);
    // Each step covers 0.15.
    CHECK(p.ArrivalStep(br) == static_cast<int>(std::ceil((1.0 - x) / 0.15 - 1e-9)));
  }
}

TEST_CASE("feasibility") {
  const CongestionProblem p{Tiny()};
  Vector ok(4);
  ok << 0.3, 0.4, 0.6, 0.6;
  CHECK(p.feasible(Pos(0.3), ok));
  Vector fast = ok;
  fast[2] = 0.7;
  CHECK_FALSE(p.feasible(Pos(0.3), fast));
  Vector back = ok;
  back[3] = 0.5;
  CHECK_FALSE(p.feasible(Pos(0.3), back));
  Vector off = ok;
  off[1] = 0.35;
  CHECK_FALSE(p.feasible(Pos(0.3), off));
  Vector start = ok;
  start[0] = 0.4;
  CHECK_FALSE(p.feasible(Pos(0.3), start));
  CHECK(p.ArrivalStep(ok) == 4);
}

TEST_CASE("gradient and conjugate") {
  const CongestionProblem p{Tiny()};
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vector& w = *p.inner_weights();
  for (int trial = 0; trial < 10; ++trial) {
    Vector b(w.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
    const Aggregate beta(b, p.inner_weights());
    const Vector numeric = oracle::CentralGradient([&](const Vector& v) { return p.f_value(Aggregate(v, p.inner_weights())); }, b);
    const Aggregate grad = p.f_grad(beta);
    for (Eigen::Index i = 0; i < b.size(); ++i) CHECK(std::abs(numeric[i] - w[i] * grad[i]) <= 1e-7);
    CHECK(std::abs(p.f_value(beta) + *p.f_conj(grad) - mfo::Inner(grad, beta)) <= 1e-12);
  }
}

TEST_CASE("constants dominate sampled trajectories") {
  const CongestionProblem p{CongestionInstance{}};
  const mfo::ProblemConstants c = p.constants();
  CHECK(c.lipschitz_grad == doctest::Approx(10.0));
  CHECK(c.g_bound == doctest::Approx(std::sqrt(2.0)));
  CHECK(c.g_diameter_sq == doctest::Approx(3.0));
  CHECK(c.grad_bound == doctest::Approx(std::sqrt(101.0)));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> start(0.0, 0.2);
  std::vector<std::pair<double, Vector>> samples;
  for (int trial = 0; trial < 60; ++trial) {
    const double x = start(rng);
    samples.emplace_back(x, p.best_response(RandomLambda(rng, p), Pos(x)));
  }
  samples.emplace_back(0.0, p.initial_decision(Pos(0.0)));
  samples.emplace_back(0.0, p.MaxSpeedTrajectory(0.0));
  const Vector& w = *p.inner_weights();
  double worst_lip = 0;
  for (const auto& [x, y] : samples) {
    const Vector gx = p.g(Pos(x), y);
    CHECK(mfo::WeightedNorm(gx, w) <= c.g_bound + 1e-12);
    for (const auto& [xp, yp] : samples) {
      const Vector gp = p.g(Pos(xp), yp);
      CHECK(mfo::WeightedDot(gx - gp, gx - gp, w) <= c.g_diameter_sq + 1e-12);
      CHECK(mfo::Norm(p.f_grad(Aggregate(0.5 * (gx + gp), p.inner_weights()))) <= c.grad_bound + 1e-12);
      if (x == xp) continue;
      const Vector moved = p.transport_select(Pos(x), y, Pos(xp));
      CHECK(p.feasible(Pos(xp), moved));
      worst_lip = std::max(worst_lip, mfo::WeightedNorm(p.g(Pos(xp), moved) - gx, w) / std::abs(x - xp));
    }
  }
  CHECK(worst_lip <= c.lipschitz_set);
}

TEST_CASE("aggregate layout") {
  const CongestionProblem p{Tiny()};
  CHECK(p.Slot(1, 0) == 1);
  CHECK(p.Slot(2, 0) == 4);
  CHECK(p.Slot(2, 2) == 6);
  const Vector still = p.initial_decision(Pos(0.05));
  const Vector g = p.g(Pos(0.05), still);
  CHECK(g[0] == doctest::Approx(0.3));
  CHECK(g[p.Slot(1, 1)] == 1.0);
  CHECK(g[p.Slot(2, 1)] == 0.0);
}
