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

// Path-based traffic assignment.
//
// Parameter x = (origin, destination) node ids; decision y = edge indicator
// of a simple path from origin to destination. The aggregate is the edge
// flow q and f(q) = sum_e Phi_e(q_e) with Phi_e' = phi_e, so that minimizers
// are Wardrop equilibria.

#ifndef MFO_EXAMPLES_TRAFFIC_HPP_
#define MFO_EXAMPLES_TRAFFIC_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mfo/measures.hpp"
#include "mfo/problem.hpp"

namespace mfo {

/// Edge latency: affine a q + b, or BPR t0 (1 + beta (q / cap)^power).
struct Latency {
  enum class Kind { kAffine, kBpr };
  Kind kind = Kind::kAffine;
  double a = 0.0, b = 0.0;
  double t0 = 0.0, beta = 0.0, cap = 1.0, power = 1.0;

  static Latency Affine(double a, double b);
  static Latency Bpr(double t0, double beta, double cap, double power);

  double operator()(double q) const;   // phi
  double Integral(double q) const;     // Phi(q) = int_0^q phi
  double Slope(double q) const;        // phi'
  void Validate() const;
};

struct TrafficEdge {
  int from = 0;
  int to = 0;
  Latency latency;
};

struct OdPair {
  int origin = 0;
  int destination = 0;
  double demand = 1.0;
};

struct TrafficNetwork {
  int num_nodes = 0;
  std::vector<TrafficEdge> edges;
  std::vector<OdPair> od_pairs;
  int max_hops = 6;
};

/// Edge list CSV: from,to,phi_kind,coeffs... with phi_kind in {affine, bpr}.
/// OD CSV: origin,destination,demand. Lines that do not start with a digit
/// are skipped.
TrafficNetwork LoadNetwork(const std::string& edge_file, const std::string& od_file,
                           int max_hops);

/// Two parallel edges 0 -> 1 with phi_1(q) = q and phi_2 = 1; unit demand.
TrafficNetwork PigouNetwork();

/// 2 x 3 grid (nodes 0 1 2 over 3 4 5) with diagonals; 10 edges, 3 OD pairs.
TrafficNetwork GridNetwork();

using Path = std::vector<int>;  // edge ids in traversal order

class TrafficProblem final : public Problem {
 public:
  explicit TrafficProblem(TrafficNetwork network);

  const TrafficNetwork& network() const { return network_; }
  std::size_t num_edges() const { return network_.edges.size(); }

  /// Admissible paths of OD pair index od, sorted lexicographically.
  const std::vector<Path>& paths(std::size_t od) const { return paths_[od]; }
  std::size_t OdIndex(const Vector& x) const;
  Vector Indicator(const Path& path) const;

  /// The OD demand distribution as a measure on X.
  EmpiricalMeasure DemandMeasure() const;

  /// Shortest admissible path for OD index od under edge costs lambda.
  const Path& ShortestPath(const Vector& edge_costs, std::size_t od) const;

  /// Edge latencies phi_e(q_e).
  Vector PotentialGrad(const Vector& flow) const;

  std::string name() const override { return "traffic"; }
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
  ProblemConstants constants() const override { return constants_; }
  Metric metric() const override { return metric_; }

 private:
  void EnumeratePaths();
  void ComputeConstants();

  TrafficNetwork network_;
  std::vector<std::vector<Path>> paths_;
  std::map<std::pair<int, int>, std::size_t> od_index_;
  Aggregate::WeightsPtr weights_;
  Metric metric_;
  ProblemConstants constants_;
};

}  // namespace mfo

#endif  // MFO_EXAMPLES_TRAFFIC_HPP_
