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

// The mean-field optimization contract
//
//   minimize  f( integral g d mu )  over mu in P(Z) with first marginal m,
//
// and the analysis operations built on it: aggregation, the linearized
// problem, the Frank-Wolfe gap certificate, the dual function and the
// directional derivative of the value function.

#ifndef MFO_PROBLEM_HPP_
#define MFO_PROBLEM_HPP_

#include <optional>
#include <string>
#include <utility>

#include "json.hpp"
#include "mfo/aggregate.hpp"
#include "mfo/common.hpp"
#include "mfo/measures.hpp"
#include "mfo/metric.hpp"

namespace mfo {

/// Problem constants.
///   lipschitz_grad  L    Lipschitz modulus of grad f
///   g_bound         M    sup |g(z)|
///   g_diameter_sq   D    sup |g(z1) - g(z2)|^2
///   grad_bound      C    sup |grad f(integral g dmu)|
///   lipschitz_set   L_g  Lipschitz modulus of x -> {g(x, y) : y in Z_x}
struct ProblemConstants {
  double lipschitz_grad = 0.0;
  double g_bound = 0.0;
  double g_diameter_sq = 0.0;
  double grad_bound = 0.0;
  double lipschitz_set = 0.0;

  /// L_g (C + L M), the stability modulus of the value function in d_1.
  double StabilityModulus() const {
    return lipschitz_set * (grad_bound + lipschitz_grad * g_bound);
  }
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;

  /// Weights of the diagonal inner product on H.
  virtual const Aggregate::WeightsPtr& inner_weights() const = 0;

  /// g(x, y) as raw coordinates in H.
  virtual Vector g(const Vector& x, const Vector& y) const = 0;
  Aggregate g_eval(const Vector& x, const Vector& y) const {
    return Aggregate(g(x, y), inner_weights());
  }

  virtual double f_value(const Aggregate& beta) const = 0;
  /// Riesz representative of the gradient in the weighted inner product.
  virtual Aggregate f_grad(const Aggregate& beta) const = 0;
  /// Fenchel conjugate f*. nullopt when not available in closed form;
  /// +infinity outside dom f*.
  virtual std::optional<double> f_conj(const Aggregate& lambda) const {
    (void)lambda;
    return std::nullopt;
  }

  /// A member of argmin_{y in Z_x} <lambda, g(x, y)>.
  virtual Vector best_response(const Aggregate& lambda, const Vector& x) const = 0;
  virtual bool feasible(const Vector& x, const Vector& y) const = 0;
  /// A decision y' in Z_{x'} with |g(x', y') - g(x, y)| <= L_g d(x, x').
  virtual Vector transport_select(const Vector& x, const Vector& y,
                                  const Vector& x_target) const = 0;
  /// Some feasible decision for x, used to seed solvers.
  virtual Vector initial_decision(const Vector& x) const = 0;

  virtual ProblemConstants constants() const = 0;
  virtual Metric metric() const = 0;
};

/// Primal value, dual function value and gap at a measure.
///   gap = <lambda, beta> - sum_x w(x) u_lambda(x) = primal + dual (when the
///   conjugate is available), with lambda = grad f(beta).
struct DualCertificate {
  Aggregate lambda;
  double primal_value = 0.0;
  double dual_value = 0.0;  // D_m(lambda); NaN when f* is unavailable
  double gap = 0.0;
};

/// integral g dmu = sum_atoms w g(x, y). Throws on an infeasible atom.
Aggregate AggregateOf(const Problem& problem, const EmpiricalMeasure& mu);

struct ResponseValue {
  double value = 0.0;
  Vector argmin;
};

/// u_lambda(x) = min_{y in Z_x} <lambda, g(x, y)> with its minimizer.
ResponseValue ULambda(const Problem& problem, const Aggregate& lambda,
                      const Vector& x);

/// sum_i w_i delta_(x_i, BR_lambda(x_i)): a minimizer of the linearized
/// problem over P_m(Z).
EmpiricalMeasure LinearizedSolve(const Problem& problem, const Aggregate& lambda,
                                 const EmpiricalMeasure& m);

/// Frank-Wolfe gap at mu; also fills the dual value when f* is available.
DualCertificate FwGap(const Problem& problem, const EmpiricalMeasure& mu);

/// D_m(lambda) = f*(lambda) - integral u_lambda dm. Throws when f* is
/// unavailable; returns +infinity outside dom f*.
double DualValue(const Problem& problem, const Aggregate& lambda,
                 const EmpiricalMeasure& m);

/// integral u_{lambda*} d(m1 - m0): the directional derivative of the value
/// function at m0 towards m1.
double ValueDirectionalDerivative(const Problem& problem,
                                  const EmpiricalMeasure& m0,
                                  const EmpiricalMeasure& m1,
                                  const Aggregate& lambda_star_m0);

nlohmann::json ToJson(const DualCertificate& cert);

}  // namespace mfo

#endif  // MFO_PROBLEM_HPP_
