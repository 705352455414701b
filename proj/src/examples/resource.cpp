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

#include "mfo/examples/resource.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace mfo {

namespace {

constexpr double kBoxTol = 1e-12;
constexpr double kBudgetTol = 1e-9;
constexpr int kBisectionSteps = 200;

}  // namespace

void ResourceInstance::Validate() const {
  if (!(horizon > 0.0)) throw MfoError("resource: horizon T must be positive");
  if (steps < 1) throw MfoError("resource: step count M must be >= 1");
  if (!(discount >= 0.0)) throw MfoError("resource: discount rate r must be >= 0");
  // eps = 1 is admitted since the reference parameter set uses it.
  if (!(impact > 0.0 && impact <= 1.0)) throw MfoError("resource: price impact eps must lie in (0, 1]");
  if (!(stock_rate > 0.0)) throw MfoError("resource: stock rate a must be positive");
}

ResourceInstance ResourceInstanceFromJson(const nlohmann::json& j) {
  ResourceInstance inst;
  if (!j.is_object()) throw MfoError("resource parameters must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "T") inst.horizon = value.get<double>();
    else if (key == "M") inst.steps = value.get<int>();
    else if (key == "r") inst.discount = value.get<double>();
    else if (key == "eps") inst.impact = value.get<double>();
    else if (key == "a") inst.stock_rate = value.get<double>();
    else throw MfoError("resource parameters: unknown field '" + key + "'");
  }
  inst.Validate();
  return inst;
}

nlohmann::json ToJson(const ResourceInstance& inst) {
  return {{"T", inst.horizon}, {"M", inst.steps}, {"r", inst.discount},
          {"eps", inst.impact}, {"a", inst.stock_rate}};
}

ResourceProblem::ResourceProblem(ResourceInstance inst) : inst_(inst) {
  inst_.Validate();
  const int m = inst_.steps;
  const double dt = inst_.dt();
  discount_.resize(m);
  for (int t = 0; t < m; ++t) discount_[t] = dt * std::exp(-inst_.discount * t * dt);
  Vector w(m + 1);
  w[0] = 1.0;
  w.tail(m) = discount_;
  weights_ = std::make_shared<const Vector>(std::move(w));
}

Vector ResourceProblem::g(const Vector& x, const Vector& y) const {
  (void)x;
  if (y.size() != inst_.steps) throw MfoError("resource: control has the wrong length");
  Vector out(inst_.steps + 1);
  out[0] = (discount_.array() * (y.array().square() - y.array())).sum();
  out.tail(inst_.steps) = y;
  return out;
}

double ResourceProblem::f_value(const Aggregate& beta) const {
  const auto tail = beta.values().tail(inst_.steps);
  return beta[0] + 0.5 * inst_.impact * WeightedDot(tail, tail, discount_);
}

Aggregate ResourceProblem::f_grad(const Aggregate& beta) const {
  Vector grad(inst_.steps + 1);
  grad[0] = 1.0;
  grad.tail(inst_.steps) = inst_.impact * beta.values().tail(inst_.steps);
  return Aggregate(std::move(grad), weights_);
}

std::optional<double> ResourceProblem::f_conj(const Aggregate& lambda) const {
  if (std::abs(lambda[0] - 1.0) > 1e-12) return std::numeric_limits<double>::infinity();
  const auto tail = lambda.values().tail(inst_.steps);
  return WeightedDot(tail, tail, discount_) / (2.0 * inst_.impact);
}

Vector ResourceProblem::ProfileAt(const Vector& linear, double lead, double theta) const {
  const double dt = inst_.dt();
  Vector q(inst_.steps);
  for (int t = 0; t < inst_.steps; ++t) {
    // Stationarity of w_t (lead q^2 + linear_t q) + theta dt q.
    const double raw = (-linear[t] - theta * dt / discount_[t]) / (2.0 * lead);
    q[t] = std::clamp(raw, 0.0, 0.5);
  }
  return q;
}

Vector ResourceProblem::ExtractionProfile(const Vector& signal, double stock) const {
  if (signal.size() != inst_.steps) throw MfoError("resource: price signal has the wrong length");
  Aggregate lambda = Aggregate::Zero(weights_);
  lambda[0] = 1.0;
  lambda.values().tail(inst_.steps) = signal;
  return best_response(lambda, Vector::Constant(1, stock));
}

Vector ResourceProblem::best_response(const Aggregate& lambda, const Vector& x) const {
  if (x.size() != 1) throw MfoError("resource: parameter must be a scalar stock");
  const double stock = x[0];
  const int m = inst_.steps;
  const double dt = inst_.dt();
  if (stock <= 0.0) return Vector::Zero(m);
  const double lead = lambda[0];
  if (!(lead > 0.0)) throw MfoError("resource: best response needs a positive first dual coordinate");
  // Per step: w_t (lead q^2 + (lambda_t - lead) q).
  const Vector linear = lambda.values().tail(m).array() - lead;

  auto spend = [&](const Vector& q) { return dt * q.sum(); };
  Vector q = ProfileAt(linear, lead, 0.0);
  if (spend(q) <= stock) return q;

  double lo = 0.0;
  double hi = 1.0;
  for (int t = 0; t < m; ++t) hi = std::max(hi, -linear[t] * discount_[t] / dt + 1.0);
  for (int it = 0; it < kBisectionSteps && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (spend(ProfileAt(linear, lead, mid)) > stock) lo = mid;
    else hi = mid;
  }
  q = ProfileAt(linear, lead, hi);
  // Spend the remaining rounding slack on the steps still strictly inside
  // the box so that the budget binds to machine precision.
  const double slack = stock - spend(q);
  if (slack > 0.0) {
    int interior = 0;
    for (int t = 0; t < m; ++t)
      if (q[t] > 0.0 && q[t] < 0.5) ++interior;
    if (interior > 0) {
      const double bump = slack / (dt * interior);
      for (int t = 0; t < m; ++t)
        if (q[t] > 0.0 && q[t] < 0.5) q[t] = std::min(0.5, q[t] + bump);
      if (spend(q) > stock) q = ProfileAt(linear, lead, hi);
    }
  }
  return q;
}

bool ResourceProblem::feasible(const Vector& x, const Vector& y) const {
  if (x.size() != 1 || y.size() != inst_.steps) return false;
  if (!AllFinite(y)) return false;
  if ((y.array() < -kBoxTol).any() || (y.array() > 0.5 + kBoxTol).any()) return false;
  return inst_.dt() * y.sum() <= x[0] + kBudgetTol;
}

Vector ResourceProblem::transport_select(const Vector& x, const Vector& y,
                                         const Vector& x_target) const {
  (void)x;
  const double dt = inst_.dt();
  const double budget = x_target[0];
  if (dt * y.sum() <= budget) return y;
  // Cumulative truncation: keep q while the spent stock stays within the
  // new budget, spend the remainder on the crossing step, then stop.
  Vector out = Vector::Zero(y.size());
  double remaining = std::max(budget, 0.0);
  for (Eigen::Index t = 0; t < y.size() && remaining > 0.0; ++t) {
    const double take = std::clamp(y[t], 0.0, remaining / dt);
    out[t] = take;
    remaining -= dt * take;
  }
  return out;
}

Vector ResourceProblem::initial_decision(const Vector& x) const {
  (void)x;
  return Vector::Zero(inst_.steps);
}

ProblemConstants ResourceProblem::constants() const {
  const double w = discount_.sum();
  const double eps = inst_.impact;
  ProblemConstants c;
  c.lipschitz_grad = eps;
  // Both sups are attained at q = 1/2 (against q = 0 for D).
  c.g_bound = std::sqrt(w * w / 16.0 + w / 4.0);
  c.g_diameter_sq = w * w / 16.0 + w / 4.0;
  c.grad_bound = std::sqrt(1.0 + eps * eps * w / 4.0);
  // Truncation moves at most |x - x'| / dt in l1 over the steps.
  c.lipschitz_set = std::sqrt(1.0 + 1.0 / inst_.dt());
  return c;
}

Vector ResourceProblem::StockPath(double stock, const Vector& q) const {
  Vector path(q.size() + 1);
  path[0] = stock;
  for (Eigen::Index t = 0; t < q.size(); ++t) path[t + 1] = path[t] - inst_.dt() * q[t];
  return path;
}

}  // namespace mfo
