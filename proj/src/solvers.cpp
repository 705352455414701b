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

#include "mfo/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfo/rng.hpp"
#include "mfo/transport.hpp"

namespace mfo {

double StepRule::operator()(int k) const {
  switch (kind) {
    case Kind::kOpenLoop:
      return 2.0 / (k + 2.0);
    case Kind::kHarmonic:
      return 1.0 / (k + 1.0);
    case Kind::kConstant:
      return constant;
  }
  return 0.0;
}

std::string StepRule::ToString() const {
  switch (kind) {
    case Kind::kOpenLoop:
      return "2/(k+2)";
    case Kind::kHarmonic:
      return "1/(k+1)";
    case Kind::kConstant: {
      std::ostringstream os;
      os.precision(17);
      os << constant;
      return os.str();
    }
  }
  return "";
}

StepRule StepRule::Parse(const std::string& text) {
  StepRule rule;
  if (text == "2/(k+2)") return rule;
  if (text == "1/(k+1)") {
    rule.kind = Kind::kHarmonic;
    return rule;
  }
  try {
    std::size_t used = 0;
    rule.constant = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw MfoError("unknown step rule '" + text + "'");
  }
  rule.kind = Kind::kConstant;
  if (!(rule.constant >= 0.0 && rule.constant <= 1.0))
    throw MfoError("constant step must lie in [0, 1]");
  return rule;
}

int SolverConfig::SimulationsAt(int k) const {
  if (simulation_schedule.empty()) return simulations;
  const std::size_t i = static_cast<std::size_t>(k);
  return i < simulation_schedule.size() ? simulation_schedule[i] : simulation_schedule.back();
}

void SolverConfig::Validate() const {
  if (iterations < 1) throw MfoError("solver: iteration count K must be >= 1");
  if (simulations < 1) throw MfoError("solver: n_k must be >= 1");
  for (int n : simulation_schedule)
    if (n < 1) throw MfoError("solver: n_k must be >= 1");
  if (gap_tolerance < 0.0) throw MfoError("solver: gap tolerance must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(const SolverConfig& config, Clock::time_point start) {
  if (!config.record_timing) return 0.0;
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Best responses for every support point; returns the failure message with
// the offending agent index, or an empty string.
std::string RespondAll(const Problem& problem, const Aggregate& lambda,
                       const EmpiricalMeasure& m, std::vector<Vector>& responses) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    try {
      responses[i] = problem.best_response(lambda, m[i].x);
    } catch (const std::exception& e) {
      return "best response failed for agent " + std::to_string(i) + ": " + e.what();
    }
  }
  return "";
}

}  // namespace

SolveReport FwSolve(const Problem& problem, const EmpiricalMeasure& m_in,
                    const SolverConfig& config,
                    const std::optional<EmpiricalMeasure>& initial) {
  config.Validate();
  if (m_in.space() != Space::kX) throw MfoError("fw_solve: marginal must be a measure on X");
  const EmpiricalMeasure m = m_in.Merged();
  const auto start = Clock::now();

  EmpiricalMeasure mu0;
  if (initial) {
    mu0 = initial->Merged();
    const EmpiricalMeasure marginal = FirstMarginal(mu0);
    if (OtSolve(marginal, m, problem.metric()).cost > kMarginalTol)
      throw MfoError("fw_solve: initial measure has the wrong first marginal");
  } else {
    Aggregate seed_beta = Aggregate::Zero(problem.inner_weights());
    for (const Atom& a : m.atoms()) seed_beta.values() += a.w * problem.g(a.x, problem.initial_decision(a.x));
    mu0 = LinearizedSolve(problem, problem.f_grad(seed_beta), m);
  }

  AtomAccumulator acc(Space::kZ);
  for (const Atom& a : mu0.atoms()) acc.Add(a.x, a.y, a.w);
  Aggregate beta = AggregateOf(problem, mu0);

  SolveReport report;
  report.seed = config.seed;
  std::vector<Vector> responses(m.size());
  for (int k = 0; k < config.iterations; ++k) {
    const Aggregate lambda = problem.f_grad(beta);
    Aggregate beta_br = Aggregate::Zero(problem.inner_weights());
    report.error = RespondAll(problem, lambda, m, responses);
    if (!report.error.empty()) break;
    for (std::size_t i = 0; i < m.size(); ++i) beta_br.values() += m[i].w * problem.g(m[i].x, responses[i]);
    IterationRecord rec;
    rec.k = k;
    rec.objective = problem.f_value(beta);
    rec.gap = Inner(lambda, beta) - Inner(lambda, beta_br);
    rec.lambda_norm = Norm(lambda);
    rec.time_ms = ElapsedMs(config, start);
    report.history.push_back(rec);
    if (config.gap_tolerance > 0.0 && rec.gap <= config.gap_tolerance) {
      report.stopped_early = true;
      break;
    }

    const double omega = config.step(k);
    if (omega >= 1.0) {
      acc = AtomAccumulator(Space::kZ);
    } else {
      acc.Scale(1.0 - omega);
    }
    if (omega > 0.0)
      for (std::size_t i = 0; i < m.size(); ++i) acc.Add(m[i].x, responses[i], omega * m[i].w);
    beta = Lerp(beta, beta_br, omega);
  }

  report.measure = acc.Build();
  if (report.error.empty()) report.certificate = FwGap(problem, report.measure);
  return report;
}

double CandidateObjective(const Problem& problem, const EmpiricalMeasure& m,
                          const AgentState& state) {
  if (state.y.size() != m.size()) throw MfoError("agent state size differs from the marginal");
  Aggregate beta = Aggregate::Zero(problem.inner_weights());
  for (std::size_t i = 0; i < m.size(); ++i) beta.values() += problem.g(m[i].x, state.y[i]);
  beta.values() /= static_cast<double>(m.size());
  return problem.f_value(beta);
}

EmpiricalMeasure AgentMeasure(const EmpiricalMeasure& m, const AgentState& state) {
  if (state.y.size() != m.size()) throw MfoError("agent state size differs from the marginal");
  std::vector<Atom> atoms;
  atoms.reserve(m.size());
  const double w = 1.0 / static_cast<double>(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) atoms.push_back(Atom{m[i].x, state.y[i], w});
  return EmpiricalMeasure(Space::kZ, std::move(atoms));
}

SolveReport SfwSolve(const Problem& problem, const EmpiricalMeasure& m,
                     const SolverConfig& config,
                     const std::optional<AgentState>& initial) {
  config.Validate();
  if (m.space() != Space::kX) throw MfoError("sfw_solve: marginal must be a measure on X");
  if (!m.IsUniform(1e-12)) throw MfoError("sfw_solve: marginal must have equal weights 1/N");
  const std::size_t n = m.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto start = Clock::now();
  const CounterStream rng(config.seed);

  AgentState state;
  if (initial) {
    state = *initial;
    if (state.y.size() != n) throw MfoError("sfw_solve: initial state size differs from the marginal");
  } else {
    Aggregate seed_beta = Aggregate::Zero(problem.inner_weights());
    for (const Atom& a : m.atoms()) seed_beta.values() += inv_n * problem.g(a.x, problem.initial_decision(a.x));
    const Aggregate lambda = problem.f_grad(seed_beta);
    for (const Atom& a : m.atoms()) state.y.push_back(problem.best_response(lambda, a.x));
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!problem.feasible(m[i].x, state.y[i])) throw MfoError("sfw_solve: infeasible agent decision");

  std::vector<Vector> g_cur(n), g_br(n), responses(n);
  for (std::size_t i = 0; i < n; ++i) g_cur[i] = problem.g(m[i].x, state.y[i]);
  Aggregate beta = Aggregate::Zero(problem.inner_weights());
  for (const Vector& g : g_cur) beta.values() += inv_n * g;

  SolveReport report;
  report.seed = config.seed;
  report.outside_guaranteed_regime = static_cast<std::size_t>(config.iterations) > 2 * n;
  std::vector<char> draw(n), best_draw(n);
  for (int k = 0; k < config.iterations; ++k) {
    const Aggregate lambda = problem.f_grad(beta);
    Aggregate beta_br = Aggregate::Zero(problem.inner_weights());
    report.error = RespondAll(problem, lambda, m, responses);
    if (!report.error.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      g_br[i] = problem.g(m[i].x, responses[i]);
      beta_br.values() += inv_n * g_br[i];
    }
    IterationRecord rec;
    rec.k = k;
    rec.objective = problem.f_value(beta);
    rec.gap = Inner(lambda, beta) - Inner(lambda, beta_br);
    rec.lambda_norm = Norm(lambda);
    rec.time_ms = ElapsedMs(config, start);
    report.history.push_back(rec);
    if (config.gap_tolerance > 0.0 && rec.gap <= config.gap_tolerance) {
      report.stopped_early = true;
      break;
    }

    const double omega = config.step(k);
    const int simulations = config.SimulationsAt(k);
    double best_value = std::numeric_limits<double>::infinity();
    Aggregate best_beta;
    bool have_best = false;
    for (int j = 0; j < simulations; ++j) {
      // Summed in agent order, exactly as the state aggregate below, so the
      // guard compares the values that end up in the history.
      Aggregate candidate = Aggregate::Zero(problem.inner_weights());
      for (std::size_t i = 0; i < n; ++i) {
        draw[i] = rng.Bernoulli(omega, static_cast<std::uint64_t>(k),
                                static_cast<std::uint64_t>(j), i) ? 1 : 0;
        candidate.values() += inv_n * (draw[i] ? g_br[i] : g_cur[i]);
      }
      const double value = problem.f_value(candidate);
      if (!have_best || value < best_value) {
        best_value = value;
        best_beta = candidate;
        best_draw = draw;
        have_best = true;
      }
    }
    if (config.monotone_guard && rec.objective < best_value) {
      // Incumbent wins; state unchanged.
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!best_draw[i]) continue;
      state.y[i] = responses[i];
      g_cur[i] = g_br[i];
    }
    beta = best_beta;
  }

  report.measure = AgentMeasure(m, state);
  if (report.error.empty()) report.certificate = FwGap(problem, report.measure);
  report.agents = std::move(state);
  return report;
}

nlohmann::json ToJson(const SolverConfig& config) {
  nlohmann::json j;
  j["iterations"] = config.iterations;
  j["step_rule"] = config.step.ToString();
  j["simulations"] = config.simulations;
  if (!config.simulation_schedule.empty()) j["simulation_schedule"] = config.simulation_schedule;
  j["seed"] = config.seed;
  j["monotone_guard"] = config.monotone_guard;
  j["gap_tolerance"] = config.gap_tolerance;
  j["record_timing"] = config.record_timing;
  return j;
}

SolverConfig SolverConfigFromJson(const nlohmann::json& j) {
  SolverConfig c;
  if (!j.is_object()) throw MfoError("solver config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "iterations") c.iterations = value.get<int>();
    else if (key == "step_rule") c.step = StepRule::Parse(value.get<std::string>());
    else if (key == "simulations") c.simulations = value.get<int>();
    else if (key == "simulation_schedule") c.simulation_schedule = value.get<std::vector<int>>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "monotone_guard") c.monotone_guard = value.get<bool>();
    else if (key == "gap_tolerance") c.gap_tolerance = value.get<double>();
    else if (key == "record_timing") c.record_timing = value.get<bool>();
    else if (key == "method") continue;
    else throw MfoError("solver config: unknown field '" + key + "'");
  }
  c.Validate();
  return c;
}

}  // namespace mfo
