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

// Minimal-time congestion game on the line.
//
// Agents start at x in [0, 1] and move right with speed in [0, Vbar] toward
// the target region [1, inf). The unit interval is split into J cells with
// smooth indicator bumps h_1..h_J; h_0 is a smooth indicator of [0, 1).
//
// Decision: trajectory gamma in R^{M+1} on the displacement grid
// gamma_t = x + s_t delta. Aggregate coordinates:
//   y1       = dt sum_{t<M} h_0(gamma_t)          (weight 1)
//   y2[j, t] = h_j(gamma_t), j = 1..J, t < M      (weight dt)
// and f(y) = y1 + (alpha / dx) |y2|_w^2.

#ifndef MFO_EXAMPLES_CONGESTION_HPP_
#define MFO_EXAMPLES_CONGESTION_HPP_

#include "json.hpp"
#include "mfo/problem.hpp"

namespace mfo {

struct CongestionInstance {
  double horizon = 1.0;      // T
  int steps = 20;            // M
  double max_speed = 3.0;    // Vbar
  double penalty = 1.0;      // alpha
  int cells = 5;             // J
  double smoothing = 20.0;   // k
  double grid_max = 1.2;     // right end of the position grid
  int grid_points = 401;     // positions on [0, grid_max]
  double start_max = 0.2;    // initial positions ~ Uni[0, start_max]

  double dt() const { return horizon / steps; }
  double dx() const { return 1.0 / cells; }
  double delta() const { return grid_max / (grid_points - 1); }
  /// Largest number of grid steps per time step.
  int MaxShift() const;
  void Validate() const;
};

CongestionInstance CongestionInstanceFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const CongestionInstance& inst);

/// phi_k: smooth step from 0 at x <= 0 to 1 at x >= 1/k.
double SmoothStep(double x, double k);

/// Max of |phi_k'|, by dense sampling of the closed-form derivative.
double SmoothStepSlope(double k);

/// (h_0(x), h_1(x), ..., h_J(x)).
Vector CongestionBumps(double x, int cells, double k);

class CongestionProblem final : public Problem {
 public:
  explicit CongestionProblem(CongestionInstance inst);

  const CongestionInstance& instance() const { return inst_; }

  std::string name() const override { return "congestion"; }
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

  /// Grid steps available from x: floor((grid_max - x) / delta).
  int GridCap(double x) const;

  /// Trajectory moving s_max grid steps per time step until the cap.
  Vector MaxSpeedTrajectory(double x) const;

  /// First t with gamma_t >= 1, or M + 1 if the target is never reached.
  int ArrivalStep(const Vector& gamma) const;

  /// Index of y2[j, t] (j = 1..J) in the aggregate.
  Eigen::Index Slot(int j, int t) const { return 1 + static_cast<Eigen::Index>(j - 1) * inst_.steps + t; }

 private:
  CongestionInstance inst_;
  Aggregate::WeightsPtr weights_;
  double step_slope_ = 0.0;
};

}  // namespace mfo

#endif  // MFO_EXAMPLES_CONGESTION_HPP_
