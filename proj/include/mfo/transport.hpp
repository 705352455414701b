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

// Exact optimal transport between finitely supported measures on X and the
// bridging construction that carries an approximate solution for one
// marginal over to another marginal.

#ifndef MFO_TRANSPORT_HPP_
#define MFO_TRANSPORT_HPP_

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "mfo/measures.hpp"
#include "mfo/metric.hpp"
#include "mfo/problem.hpp"

namespace mfo {

struct CouplingEntry {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0.0;
};

/// A transport plan between two measures on X. Entries are sorted by
/// (source, target) and carry positive mass.
struct Coupling {
  EmpiricalMeasure source;
  EmpiricalMeasure target;
  std::vector<CouplingEntry> entries;
  double cost = 0.0;

  /// Largest absolute deviation of row/column sums from the marginals.
  double MarginalResidual() const;
};

/// Exact optimal plan for min sum d(x, x') rho(x, x') over couplings of m0
/// and m1. One-dimensional Euclidean problems use the monotone plan; all
/// others go through the transportation simplex.
Coupling OtSolve(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1,
                 const Metric& metric);

/// Transportation simplex on the full cost matrix, for any metric.
Coupling OtSolveSimplex(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1,
                        const Metric& metric);

/// Quantile (north-west corner on sorted supports) plan. Only valid for one
/// dimensional points under |x - x'|.
Coupling OtSolveLine(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1);

struct Assignment {
  std::vector<std::size_t> permutation;  // source i -> target permutation[i]
  double cost = 0.0;                     // (1/N) sum d(x_i, x'_perm(i))
};

/// Hungarian algorithm for two uniform measures with N atoms each.
Assignment AssignmentSolve(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1,
                           const Metric& metric);

/// Atom of a measure on Z x X.
struct GluedAtom {
  Vector x;
  Vector y;
  Vector x_target;
  double w = 0.0;
};

struct GluedMeasure {
  std::vector<GluedAtom> atoms;

  EmpiricalMeasure ProjectZ() const;       // pi_12
  EmpiricalMeasure ProjectTarget() const;  // pi_3
};

/// nu = sum_(x,y) mu0(x, y) delta_(x, y) (x) rho_x, where rho_x is the
/// conditional of rho given source point x.
GluedMeasure Glue(const EmpiricalMeasure& mu0, const Coupling& rho);

struct BridgeResult {
  EmpiricalMeasure measure;  // mu1, first marginal m1
  Coupling coupling;         // optimal plan between pi_1 mu0 and m1
  double d1 = 0.0;
};

/// Transports mu0 onto the marginal m1: optimal plan, gluing, then
/// push-forward through the problem's transport selection.
BridgeResult Bridge(const EmpiricalMeasure& mu0, const EmpiricalMeasure& m1,
                    const Problem& problem);

nlohmann::json ToJson(const Coupling& coupling);

}  // namespace mfo

#endif  // MFO_TRANSPORT_HPP_
