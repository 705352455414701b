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

// Producers extracting an exhaustible resource on [0, T] with M steps.
//
// Parameter x: initial stock. Decision q in [0, 1/2]^M with dt sum q <= x.
// H = R x R^M with weights (1, dt e^{-r t dt}); g(x, q) = (sum_t w_t (q_t^2 -
// q_t), q) and f(b1, b2) = b1 + (eps/2) |b2|_w^2, so grad f = (1, eps Q) and
// each best response is the producer's optimal extraction against the
// aggregate Q.

#ifndef MFO_EXAMPLES_RESOURCE_HPP_
#define MFO_EXAMPLES_RESOURCE_HPP_

#include "json.hpp"
#include "mfo/problem.hpp"

namespace mfo {

struct ResourceInstance {
  double horizon = 10.0;   // T
  int steps = 50;          // M
  double discount = 1.0;   // r
  double impact = 1.0;     // eps
  double stock_rate = 1.0; // a, rate of the exponential stock distribution

  double dt() const { return horizon / steps; }
  void Validate() const;
};

ResourceInstance ResourceInstanceFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const ResourceInstance& inst);

class ResourceProblem final : public Problem {
 public:
  explicit ResourceProblem(ResourceInstance inst);

  const ResourceInstance& instance() const { return inst_; }

  std::string name() const override { return "resource"; }
  const Aggregate::WeightsPtr& inner_weights() const override { return weights_; }
  Vector g(const Vector& x, const Vector& y) const override;
  double f_value(const Aggregate& beta) const override;
  Aggregate f_grad(const Aggregate& beta) const override;
  std::optional<double> f_conj(const Aggregate& lambda) const override;
  Vector best_response(const Aggregate& lambda, const Vector& x) const override;
  bool feasible(const Vector& x, const Vector& y) const override;
  Vector transport_select(const Vector& x, const Vector& y,
                          const Vector& x_target) const override;
  Vector initial_decision(const Vector& x) const override;
  ProblemConstants constants() const override;
  Metric metric() const override { return Metric::Euclidean(); }

  /// Extraction profile against a price signal: argmin of
  /// sum_t dt e^{-r t dt} q_t (q_t - 1 + signal_t) over the admissible set,
  /// by bisection on the budget multiplier.
  Vector ExtractionProfile(const Vector& signal, double stock) const;

  /// Discounted weights dt e^{-r t dt}, t = 0..M-1.
  const Vector& discount_weights() const { return discount_; }

  /// X_t = x - dt sum_{s<t} q_s for t = 0..M.
  Vector StockPath(double stock, const Vector& q) const;

 private:
  // Profile for multiplier theta >= 0 with quadratic coefficient lead > 0.
  Vector ProfileAt(const Vector& linear, double lead, double theta) const;

  ResourceInstance inst_;
  Vector discount_;
  Aggregate::WeightsPtr weights_;
};

}  // namespace mfo

#endif  // MFO_EXAMPLES_RESOURCE_HPP_
