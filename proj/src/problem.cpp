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

#include "mfo/problem.hpp"

#include <cmath>
#include <limits>

namespace mfo {

Aggregate AggregateOf(const Problem& problem, const EmpiricalMeasure& mu) {
  if (mu.space() != Space::kZ) throw MfoError("aggregate needs a measure on Z");
  Aggregate beta = Aggregate::Zero(problem.inner_weights());
  for (const Atom& a : mu.atoms()) {
    if (!problem.feasible(a.x, a.y))
      throw MfoError("aggregate: infeasible atom in measure");
    beta.values() += a.w * problem.g(a.x, a.y);
  }
  return beta;
}

ResponseValue ULambda(const Problem& problem, const Aggregate& lambda,
                      const Vector& x) {
  if (!AllFinite(lambda.values())) throw MfoError("u_lambda: non-finite lambda");
  ResponseValue out;
  out.argmin = problem.best_response(lambda, x);
  out.value = Inner(lambda, problem.g_eval(x, out.argmin));
  return out;
}

EmpiricalMeasure LinearizedSolve(const Problem& problem, const Aggregate& lambda,
                                 const EmpiricalMeasure& m) {
  if (m.space() != Space::kX) throw MfoError("linearized solve needs a measure on X");
  std::vector<Atom> atoms;
  atoms.reserve(m.size());
  for (const Atom& a : m.atoms())
    atoms.push_back(Atom{a.x, problem.best_response(lambda, a.x), a.w});
  return EmpiricalMeasure(Space::kZ, std::move(atoms)).Merged();
}

DualCertificate FwGap(const Problem& problem, const EmpiricalMeasure& mu) {
  DualCertificate cert;
  const Aggregate beta = AggregateOf(problem, mu);
  cert.lambda = problem.f_grad(beta);
  cert.primal_value = problem.f_value(beta);
  const EmpiricalMeasure m = FirstMarginal(mu);
  double lower = 0.0;
  for (const Atom& a : m.atoms()) lower += a.w * ULambda(problem, cert.lambda, a.x).value;
  cert.gap = Inner(cert.lambda, beta) - lower;
  const std::optional<double> conj = problem.f_conj(cert.lambda);
  cert.dual_value = conj ? *conj - lower : std::numeric_limits<double>::quiet_NaN();
  return cert;
}

double DualValue(const Problem& problem, const Aggregate& lambda,
                 const EmpiricalMeasure& m) {
  const std::optional<double> conj = problem.f_conj(lambda);
  if (!conj) throw MfoError("dual value: conjugate of f is not available for " + problem.name());
  if (std::isinf(*conj)) return std::numeric_limits<double>::infinity();
  double integral = 0.0;
  for (const Atom& a : m.atoms()) integral += a.w * ULambda(problem, lambda, a.x).value;
  return *conj - integral;
}

double ValueDirectionalDerivative(const Problem& problem,
                                  const EmpiricalMeasure& m0,
                                  const EmpiricalMeasure& m1,
                                  const Aggregate& lambda_star_m0) {
  double result = 0.0;
  for (const Atom& a : m1.atoms()) result += a.w * ULambda(problem, lambda_star_m0, a.x).value;
  for (const Atom& a : m0.atoms()) result -= a.w * ULambda(problem, lambda_star_m0, a.x).value;
  return result;
}

nlohmann::json ToJson(const DualCertificate& cert) {
  nlohmann::json j;
  j["lambda"] = VectorToJson(cert.lambda.values());
  j["primal_value"] = cert.primal_value;
  if (std::isnan(cert.dual_value)) {
    j["dual_value"] = nullptr;
  } else {
    j["dual_value"] = cert.dual_value;
  }
  j["gap"] = cert.gap;
  return j;
}

}  // namespace mfo
