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

#include "mfo/examples/congestion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <vector>

namespace mfo {

namespace {

constexpr double kGridTol = 1e-9;

}  // namespace

int CongestionInstance::MaxShift() const {
  return static_cast<int>(std::floor(max_speed * dt() / delta() + kGridTol));
}

void CongestionInstance::Validate() const {
  if (!(horizon > 0.0)) throw MfoError("congestion: horizon T must be positive");
  if (steps < 1) throw MfoError("congestion: step count M must be >= 1");
  if (!(max_speed >= 0.0)) throw MfoError("congestion: max speed must be >= 0");
  if (!(penalty >= 0.0)) throw MfoError("congestion: alpha must be >= 0");
  if (cells < 1) throw MfoError("congestion: J must be >= 1");
  if (!(smoothing >= cells)) throw MfoError("congestion: smoothing k must be >= J");
  if (!(grid_max >= 1.0)) throw MfoError("congestion: position grid must reach the target at 1");
  if (grid_points < 2) throw MfoError("congestion: position grid needs >= 2 points");
  if (!(start_max >= 0.0 && start_max <= 1.0)) throw MfoError("congestion: start range must lie in [0, 1]");
}

CongestionInstance CongestionInstanceFromJson(const nlohmann::json& j) {
  CongestionInstance inst;
  if (!j.is_object()) throw MfoError("congestion parameters must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "T") inst.horizon = value.get<double>();
    else if (key == "M") inst.steps = value.get<int>();
    else if (key == "Vbar") inst.max_speed = value.get<double>();
    else if (key == "alpha") inst.penalty = value.get<double>();
    else if (key == "J") inst.cells = value.get<int>();
    else if (key == "k") inst.smoothing = value.get<double>();
    else if (key == "grid_max") inst.grid_max = value.get<double>();
    else if (key == "grid_points") inst.grid_points = value.get<int>();
    else if (key == "start_max") inst.start_max = value.get<double>();
    else throw MfoError("congestion parameters: unknown field '" + key + "'");
  }
  inst.Validate();
  return inst;
}

nlohmann::json ToJson(const CongestionInstance& inst) {
  return {{"T", inst.horizon},          {"M", inst.steps},
          {"Vbar", inst.max_speed},     {"alpha", inst.penalty},
          {"J", inst.cells},            {"k", inst.smoothing},
          {"grid_max", inst.grid_max},  {"grid_points", inst.grid_points},
          {"start_max", inst.start_max}};
}

double SmoothStep(double x, double k) {
  if (x <= 0.0) return 0.0;
  const double s = k * x;
  if (s >= 1.0) return 1.0;
  return 1.0 / (1.0 + std::exp(1.0 / s - 1.0 / (1.0 - s)));
}

double SmoothStepSlope(double k) {
  constexpr int kSamples = 200000;
  double best = 0.0;
  for (int i = 1; i < kSamples; ++i) {
    const double s = static_cast<double>(i) / kSamples;
    const double p = SmoothStep(s / k, k);
    best = std::max(best, p * (1.0 - p) * k * (1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s))));
  }
  return best * (1.0 + 1e-6);
}

namespace {

// Plateau bump of width dx: rises on (-1/k, 0), falls on (dx - 1/k, dx).
double CellBump(double x, double dx, double k) {
  if (x <= -1.0 / k || x >= dx) return 0.0;
  if (x < 0.0) return SmoothStep(x + 1.0 / k, k);
  if (x <= dx - 1.0 / k) return 1.0;
  return 1.0 - SmoothStep(x - dx + 1.0 / k, k);
}

}  // namespace

Vector CongestionBumps(double x, int cells, double k) {
  const double dx = 1.0 / cells;
  Vector h(cells + 1);
  h[0] = x < 1.0 - 1.0 / k ? 1.0 : 1.0 - SmoothStep(x - 1.0 + 1.0 / k, k);
  for (int j = 1; j <= cells; ++j) h[j] = CellBump(x - (j - 1) * dx, dx, k);
  return h;
}

CongestionProblem::CongestionProblem(CongestionInstance inst) : inst_(inst) {
  inst_.Validate();
  const Eigen::Index dim = 1 + static_cast<Eigen::Index>(inst_.cells) * inst_.steps;
  Vector w = Vector::Constant(dim, inst_.dt());
  w[0] = 1.0;
  weights_ = std::make_shared<const Vector>(std::move(w));
  step_slope_ = SmoothStepSlope(inst_.smoothing);
}

int CongestionProblem::GridCap(double x) const {
  const double room = (inst_.grid_max - x) / inst_.delta();
  return room <= 0.0 ? 0 : static_cast<int>(std::floor(room + kGridTol));
}

Vector CongestionProblem::g(const Vector& x, const Vector& y) const {
  (void)x;
  const int m = inst_.steps;
  if (y.size() != m + 1) throw MfoError("congestion: trajectory has the wrong length");
  Vector out = Vector::Zero(weights_->size());
  for (int t = 0; t < m; ++t) {
    const Vector h = CongestionBumps(y[t], inst_.cells, inst_.smoothing);
    out[0] += inst_.dt() * h[0];
    for (int j = 1; j <= inst_.cells; ++j) out[Slot(j, t)] = h[j];
  }
  return out;
}

double CongestionProblem::f_value(const Aggregate& beta) const {
  const auto tail = beta.values().tail(beta.size() - 1);
  return beta[0] + inst_.penalty / inst_.dx() * inst_.dt() * tail.squaredNorm();
}

Aggregate CongestionProblem::f_grad(const Aggregate& beta) const {
  Vector grad = (2.0 * inst_.penalty / inst_.dx()) * beta.values();
  grad[0] = 1.0;
  return Aggregate(std::move(grad), weights_);
}

std::optional<double> CongestionProblem::f_conj(const Aggregate& lambda) const {
  const double inf = std::numeric_limits<double>::infinity();
  if (std::abs(lambda[0] - 1.0) > 1e-12) return inf;
  const double sq = inst_.dt() * lambda.values().tail(lambda.size() - 1).squaredNorm();
  if (inst_.penalty == 0.0) return sq > 0.0 ? inf : 0.0;
  return sq * inst_.dx() / (4.0 * inst_.penalty);
}

Vector CongestionProblem::best_response(const Aggregate& lambda, const Vector& x) const {
  if (x.size() != 1) throw MfoError("congestion: parameter must be a scalar position");
  const int m = inst_.steps;
  const int cap = GridCap(x[0]);
  const int shift = inst_.MaxShift();
  const double dt = inst_.dt();
  const double delta = inst_.delta();

  std::vector<Vector> bumps(cap + 1);
  for (int s = 0; s <= cap; ++s) bumps[s] = CongestionBumps(x[0] + s * delta, inst_.cells, inst_.smoothing);

  // Backward pass; the window minimum keeps the largest index among ties so
  // that flat costs resolve toward faster motion.
  std::vector<double> next(cap + 1, 0.0), value(cap + 1);
  std::vector<std::vector<int>> choice(m, std::vector<int>(cap + 1));
  for (int t = m - 1; t >= 0; --t) {
    std::deque<int> window;
    for (int s = cap; s >= 0; --s) {
      while (!window.empty() && next[window.back()] > next[s]) window.pop_back();
      window.push_back(s);
      while (window.front() > s + shift) window.pop_front();
      const int best = window.front();
      double stage = lambda[0] * dt * bumps[s][0];
      for (int j = 1; j <= inst_.cells; ++j) stage += lambda[Slot(j, t)] * dt * bumps[s][j];
      value[s] = stage + next[best];
      choice[t][s] = best;
    }
    std::swap(next, value);
  }

  Vector gamma(m + 1);
  int s = 0;
  for (int t = 0; t <= m; ++t) {
    gamma[t] = x[0] + s * delta;
    if (t < m) s = choice[t][s];
  }
  return gamma;
}

bool CongestionProblem::feasible(const Vector& x, const Vector& y) const {
  const int m = inst_.steps;
  if (x.size() != 1 || y.size() != m + 1 || !AllFinite(y)) return false;
  if (std::abs(y[0] - x[0]) > 1e-12) return false;
  const double delta = inst_.delta();
  const int cap = GridCap(x[0]);
  int prev = 0;
  for (int t = 0; t <= m; ++t) {
    const double steps = (y[t] - x[0]) / delta;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-6) return false;
    const int s = static_cast<int>(rounded);
    if (s < prev || s - prev > inst_.MaxShift() || s > cap) return false;
    prev = s;
  }
  return true;
}

Vector CongestionProblem::transport_select(const Vector& x, const Vector& y,
                                           const Vector& x_target) const {
  const double delta = inst_.delta();
  const int cap = GridCap(x_target[0]);
  Vector out(y.size());
  // Same displacement profile from the new start, clipped at the grid end.
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    const int s = std::min(static_cast<int>(std::lround((y[t] - x[0]) / delta)), cap);
    out[t] = x_target[0] + s * delta;
  }
  return out;
}

Vector CongestionProblem::initial_decision(const Vector& x) const {
  return Vector::Constant(inst_.steps + 1, x[0]);
}

ProblemConstants CongestionProblem::constants() const {
  const double T = inst_.horizon;
  const double lead = 2.0 * inst_.penalty / inst_.dx();
  ProblemConstants c;
  c.lipschitz_grad = lead;
  c.g_bound = std::sqrt(T * T + T);
  c.g_diameter_sq = T * T + 2.0 * T;
  c.grad_bound = std::sqrt(1.0 + lead * lead * T);
  // At most two bumps move at once, with opposite slopes.
  c.lipschitz_set = step_slope_ * std::sqrt(T * T + 4.0 * T);
  return c;
}

Vector CongestionProblem::MaxSpeedTrajectory(double x) const {
  const int cap = GridCap(x);
  Vector gamma(inst_.steps + 1);
  for (int t = 0; t <= inst_.steps; ++t) gamma[t] = x + std::min(t * inst_.MaxShift(), cap) * inst_.delta();
  return gamma;
}

int CongestionProblem::ArrivalStep(const Vector& gamma) const {
  for (Eigen::Index t = 0; t < gamma.size(); ++t)
    if (gamma[t] >= 1.0 - 1e-12) return static_cast<int>(t);
  return static_cast<int>(gamma.size());
}

}  // namespace mfo
