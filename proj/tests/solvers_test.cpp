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

#include "mfo/rng.hpp"
#include "mfo/solvers.hpp"
#include "support/oracles.hpp"
#include "support/toy_problem.hpp"

using mfo::Aggregate;
using mfo::Atom;
using mfo::EmpiricalMeasure;
using mfo::Space;
using mfo::Vector;
using toy::FiniteChoiceProblem;
using toy::Scalar;
using toy::Vec2;

namespace {

using Objective = FiniteChoiceProblem::Objective;

EmpiricalMeasure UniformLabels(int n) {
  std::vector<Vector> pts;
  for (int i = 0; i < n; ++i) pts.push_back(Scalar(i));
  return EmpiricalMeasure::UniformOnX(pts);
}

// Every label picks a corner of the same triangle; targets inside it make
// the optimum a genuine mixture.
FiniteChoiceProblem Corners(int labels, const Vector& target) {
  std::map<int, std::vector<Vector>> choices;
  for (int x = 0; x < labels; ++x) choices[x] = {Vec2(0, 0), Vec2(1, 1), Vec2(1, 0)};
  return FiniteChoiceProblem(choices, Objective::kQuadratic, target);
}

// Delegates to another problem and fails the n-th best response onwards.
class FailingProblem final : public mfo::Problem {
 public:
  FailingProblem(const mfo::Problem& inner, int fail_after) : inner_(inner), left_(fail_after) {}
  std::string name() const override { return "failing"; }
  const Aggregate::WeightsPtr& inner_weights() const override { return inner_.inner_weights(); }
  Vector g(const Vector& x, const Vector& y) const override { return inner_.g(x, y); }
  double f_value(const Aggregate& b) const override { return inner_.f_value(b); }
  Aggregate f_grad(const Aggregate& b) const override { return inner_.f_grad(b); }
  Vector best_response(const Aggregate& l, const Vector& x) const override {
    if (left_-- <= 0) throw mfo::MfoError("oracle down");
    return inner_.best_response(l, x);
  }
  bool feasible(const Vector& x, const Vector& y) const override { return inner_.feasible(x, y); }
  Vector transport_select(const Vector& x, const Vector& y, const Vector& t) const override {
    return inner_.transport_select(x, y, t);
  }
  Vector initial_decision(const Vector& x) const override { return inner_.initial_decision(x); }
  mfo::ProblemConstants constants() const override { return inner_.constants(); }
  mfo::Metric metric() const override { return inner_.metric(); }

 private:
  const mfo::Problem& inner_;
  mutable int left_;
};

}  // namespace

TEST_CASE("step rules") {
  mfo::StepRule open;
  CHECK(open(0) == 1.0);
  CHECK(open(2) == doctest::Approx(0.5));
  CHECK(mfo::StepRule::Parse("1/(k+1)")(3) == doctest::Approx(0.25));
  CHECK(mfo::StepRule::Parse("0.3")(7) == doctest::Approx(0.3));
  CHECK(mfo::StepRule::Parse(open.ToString()).kind == mfo::StepRule::Kind::kOpenLoop);
  CHECK_THROWS_AS(mfo::StepRule::Parse("fast"), mfo::MfoError);
  CHECK_THROWS_AS(mfo::StepRule::Parse("1.5"), mfo::MfoError);
}

TEST_CASE("solver config JSON") {
  mfo::SolverConfig c;
  c.iterations = 12;
  c.step = mfo::StepRule::Parse("1/(k+1)");
  c.simulation_schedule = {1, 2, 3};
  c.seed = 99;
  const mfo::SolverConfig back = mfo::SolverConfigFromJson(mfo::ToJson(c));
  CHECK(back.iterations == 12);
  CHECK(back.step.kind == mfo::StepRule::Kind::kHarmonic);
  CHECK(back.SimulationsAt(1) == 2);
  CHECK(back.SimulationsAt(10) == 3);
  CHECK(back.seed == 99);
  CHECK_THROWS_AS(mfo::SolverConfigFromJson({{"iterations", 3}, {"itrations", 4}}), mfo::MfoError);
  CHECK_THROWS_AS(mfo::SolverConfigFromJson({{"iterations", 0}}), mfo::MfoError);
  CHECK_THROWS_AS(mfo::SolverConfigFromJson({{"simulations", 0}}), mfo::MfoError);
}

TEST_CASE("counter stream draws do not depend on call order") {
  const mfo::CounterStream a(5), b(5), c(6);
  const double first = a.Uniform(3, 1, 4);
  for (int i = 0; i < 10; ++i) (void)b.Uniform(i, i, i);
  CHECK(b.Uniform(3, 1, 4) == first);
  CHECK(c.Uniform(3, 1, 4) != first);
  int hits = 0;
  for (std::uint64_t i = 0; i < 20000; ++i) hits += a.Bernoulli(0.3, 0, 0, i) ? 1 : 0;
  CHECK(std::abs(hits / 20000.0 - 0.3) < 0.02);
  CHECK(a.Bernoulli(1.0, 1, 1, 1));
  CHECK_FALSE(a.Bernoulli(0.0, 1, 1, 1));
}

TEST_CASE("Frank-Wolfe meets its rate on a mixed optimum") {
  const Vector target = Vec2(0.6, 0.3);
  const FiniteChoiceProblem p = Corners(1, target);
  // Optimum: project the target onto the triangle (0,0), (1,1), (1,0); it lies inside.
  const double exact = 0.0;
  mfo::SolverConfig config;
  config.iterations = 400;
  const mfo::SolveReport rep = mfo::FwSolve(p, UniformLabels(1), config);
  REQUIRE(rep.history.size() == 400);
  const mfo::ProblemConstants c = p.constants();
  for (int k = 1; k < 400; ++k) {
    CHECK(rep.history[k].objective - exact <= 2 * c.lipschitz_grad * c.g_diameter_sq / k + 1e-12);
    CHECK(rep.history[k].gap >= rep.history[k].objective - exact - 1e-12);
  }
  CHECK(rep.certificate.gap >= 0.0);
  CHECK(rep.certificate.primal_value - exact <= rep.certificate.gap + 1e-12);
}

TEST_CASE("a linear objective is solved by one full step") {
  std::map<int, std::vector<Vector>> choices{{0, {Scalar(3), Scalar(-2), Scalar(1)}}, {1, {Scalar(0), Scalar(5)}}};
  const FiniteChoiceProblem p(choices, Objective::kLinear, Scalar(1));
  mfo::SolverConfig config;
  config.iterations = 3;
  const mfo::SolveReport rep = mfo::FwSolve(p, UniformLabels(2), config);
  CHECK(rep.certificate.primal_value == doctest::Approx(-1.0));
  CHECK(rep.certificate.gap == doctest::Approx(0.0));
}

TEST_CASE("harmonic steps average the best responses") {
  const FiniteChoiceProblem p = Corners(1, Vec2(0.6, 0.3));
  mfo::SolverConfig config;
  config.iterations = 30;
  config.step = mfo::StepRule::Parse("1/(k+1)");
  const mfo::SolveReport rep = mfo::FwSolve(p, UniformLabels(1), config);
  // Replay fictitious play by hand.
  Vector avg = Vector::Zero(2);
  {
    // Seed decision: best response to the gradient at the initial decision.
    const Vector lambda = Vec2(0, 0) - Vec2(0.6, 0.3);
    avg = p.best_response(Aggregate(lambda, p.inner_weights()), Scalar(0));
  }
  for (int k = 0; k < 30; ++k) {
    const Vector br = p.best_response(Aggregate(avg - Vec2(0.6, 0.3), p.inner_weights()), Scalar(0));
    avg = (1.0 - 1.0 / (k + 1)) * avg + br / (k + 1.0);
  }
  const Aggregate got = mfo::AggregateOf(p, rep.measure);
  CHECK(std::abs(got[0] - avg[0]) <= 1e-12);
  CHECK(std::abs(got[1] - avg[1]) <= 1e-12);
}

TEST_CASE("gap tolerance stops early") {
  const FiniteChoiceProblem p = Corners(1, Vec2(0.6, 0.3));
  mfo::SolverConfig config;
  config.iterations = 100000;
  config.gap_tolerance = 1e-3;
  const mfo::SolveReport rep = mfo::FwSolve(p, UniformLabels(1), config);
  CHECK(rep.stopped_early);
  CHECK(rep.history.back().gap <= 1e-3);
  CHECK(rep.history.size() < 100000);
}

TEST_CASE("initial measure with the wrong marginal is rejected") {
  const FiniteChoiceProblem p = Corners(2, Vec2(0.6, 0.3));
  const EmpiricalMeasure wrong = EmpiricalMeasure::Dirac(Space::kZ, Scalar(0), Vec2(0, 0));
  CHECK_THROWS_AS(mfo::FwSolve(p, UniformLabels(2), mfo::SolverConfig{}, wrong), mfo::MfoError);
}

TEST_CASE("best response failures are reported with the agent index") {
  const FiniteChoiceProblem inner = Corners(3, Vec2(0.6, 0.3));
  SUBCASE("deterministic") {
    const FailingProblem p(inner, 3 + 3 + 1);
    const mfo::SolveReport rep = mfo::FwSolve(p, UniformLabels(3), mfo::SolverConfig{});
    CHECK(rep.error.find("agent 1") != std::string::npos);
    CHECK(rep.error.find("oracle down") != std::string::npos);
    CHECK(rep.history.size() == 1);
  }
  SUBCASE("stochastic") {
    const FailingProblem p(inner, 3 + 2);
    const mfo::SolveReport rep = mfo::SfwSolve(p, UniformLabels(3), mfo::SolverConfig{});
    CHECK(rep.error.find("agent 2") != std::string::npos);
    CHECK(rep.history.empty());
  }
}

TEST_CASE("stochastic Frank-Wolfe") {
  std::map<int, std::vector<Vector>> choices;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int x = 0; x < 20; ++x)
    for (int c = 0; c < 4; ++c) choices[x].push_back(Vec2(u(rng), u(rng)));
  const FiniteChoiceProblem p(choices, Objective::kQuadratic, Vec2(0.5, 0.5));
  const EmpiricalMeasure m = UniformLabels(20);
  mfo::SolverConfig config;
  config.iterations = 40;
  config.simulations = 3;
  config.seed = 7;

  SUBCASE("seeded runs repeat exactly") {
    const mfo::SolveReport a = mfo::SfwSolve(p, m, config);
    const mfo::SolveReport b = mfo::SfwSolve(p, m, config);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t k = 0; k < a.history.size(); ++k) CHECK(a.history[k].objective == b.history[k].objective);
    config.seed = 8;
    const mfo::SolveReport c = mfo::SfwSolve(p, m, config);
    bool differs = false;
    for (std::size_t k = 0; k < a.history.size(); ++k) differs |= a.history[k].objective != c.history[k].objective;
    CHECK(differs);
  }
  SUBCASE("objective never increases under the guard") {
    const mfo::SolveReport rep = mfo::SfwSolve(p, m, config);
    for (std::size_t k = 1; k < rep.history.size(); ++k)
      CHECK(rep.history[k].objective <= rep.history[k - 1].objective);
    CHECK(rep.certificate.primal_value <= rep.history.back().objective + 1e-15);
  }
  SUBCASE("every agent holds one feasible decision") {
    const mfo::SolveReport rep = mfo::SfwSolve(p, m, config);
    REQUIRE(rep.agents.has_value());
    CHECK(rep.measure.size() == 20);
    for (const Atom& a : rep.measure.atoms()) {
      CHECK(p.feasible(a.x, a.y));
      CHECK(a.w == doctest::Approx(0.05));
    }
    CHECK(mfo::CandidateObjective(p, m, *rep.agents) == doctest::Approx(rep.certificate.primal_value));
  }
  SUBCASE("long runs are flagged") {
    config.iterations = 41;
    CHECK(mfo::SfwSolve(p, m, config).outside_guaranteed_regime);
    config.iterations = 40;
    CHECK_FALSE(mfo::SfwSolve(p, m, config).outside_guaranteed_regime);
  }
  SUBCASE("expected excess stays below the stochastic bound") {
    // Reference value from a long deterministic run.
    mfo::SolverConfig ref;
    ref.iterations = 4000;
    const mfo::SolveReport best = mfo::FwSolve(p, m, ref);
    const double val = best.certificate.primal_value - best.certificate.gap;
    const mfo::ProblemConstants c = p.constants();
    double mean = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      config.seed = s;
      mean += (mfo::SfwSolve(p, m, config).certificate.primal_value - val) / 20.0;
    }
    CHECK(mean <= 4 * c.lipschitz_grad * c.g_diameter_sq / config.iterations);
  }
  SUBCASE("unequal weights are rejected") {
    const EmpiricalMeasure skewed(Space::kX, {Atom{Scalar(0), Vector(), 0.3}, Atom{Scalar(1), Vector(), 0.7}});
    CHECK_THROWS_AS(mfo::SfwSolve(p, skewed, config), mfo::MfoError);
  }
}

TEST_CASE("agent measures keep one atom per agent") {
  const EmpiricalMeasure m = UniformLabels(2);
  const mfo::AgentState state{{Vec2(0, 0), Vec2(0, 0)}};
  CHECK(mfo::AgentMeasure(m, state).size() == 2);
  CHECK_THROWS_AS(mfo::AgentMeasure(m, mfo::AgentState{{Vec2(0, 0)}}), mfo::MfoError);
}
