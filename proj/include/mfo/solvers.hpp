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

// Frank-Wolfe and Stochastic Frank-Wolfe over P_{m_N}(Z).
//
// Frank-Wolfe mixes the current measure with the linearized minimizer
// (one best response per support point); with the harmonic step 1/(k+1)
// this is fictitious play. Stochastic Frank-Wolfe keeps one decision per
// agent and lets each agent switch to its best response with probability
// omega_k, keeping the best of n_k simulated profiles.

#ifndef MFO_SOLVERS_HPP_
#define MFO_SOLVERS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfo/measures.hpp"
#include "mfo/problem.hpp"

namespace mfo {

struct StepRule {
  enum class Kind { kOpenLoop, kHarmonic, kConstant };
  Kind kind = Kind::kOpenLoop;  // 2/(k+2)
  double constant = 1.0;

  double operator()(int k) const;
  std::string ToString() const;
  static StepRule Parse(const std::string& text);
};

struct SolverConfig {
  int iterations = 100;                // K
  StepRule step;
  int simulations = 1;                 // n_k when no schedule is given
  std::vector<int> simulation_schedule;  // n_k per iteration, optional
  std::uint64_t seed = 0;
  bool monotone_guard = true;          // keep the incumbent as a candidate
  double gap_tolerance = 0.0;          // early exit when > 0
  bool record_timing = false;          // wall-clock column stays 0 otherwise

  int SimulationsAt(int k) const;
  void Validate() const;
};

struct IterationRecord {
  int k = 0;
  double objective = 0.0;
  double gap = 0.0;
  double lambda_norm = 0.0;
  double time_ms = 0.0;
};

/// Decisions of the N agents of an empirical marginal, in atom order.
struct AgentState {
  std::vector<Vector> y;
};

struct SolveReport {
  std::vector<IterationRecord> history;
  EmpiricalMeasure measure;
  DualCertificate certificate;
  std::uint64_t seed = 0;
  bool stopped_early = false;
  /// Stochastic runs with K > 2N have no expectation bound.
  bool outside_guaranteed_regime = false;
  std::optional<AgentState> agents;  // stochastic runs only
  /// Set when an oracle failed; the report then holds the iterations done.
  std::string error;
};

SolveReport FwSolve(const Problem& problem, const EmpiricalMeasure& m,
                    const SolverConfig& config,
                    const std::optional<EmpiricalMeasure>& initial = std::nullopt);

SolveReport SfwSolve(const Problem& problem, const EmpiricalMeasure& m,
                     const SolverConfig& config,
                     const std::optional<AgentState>& initial = std::nullopt);

/// f((1/N) sum_i g(x_i, y_i)) for the support points of a uniform m.
double CandidateObjective(const Problem& problem, const EmpiricalMeasure& m,
                          const AgentState& state);

/// (1/N) sum_i delta_(x_i, y_i), one atom per agent (no merging).
EmpiricalMeasure AgentMeasure(const EmpiricalMeasure& m, const AgentState& state);

nlohmann::json ToJson(const SolverConfig& config);
SolverConfig SolverConfigFromJson(const nlohmann::json& j);

}  // namespace mfo

#endif  // MFO_SOLVERS_HPP_
