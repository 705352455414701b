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

#include "mfo/examples/traffic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <queue>
#include <sstream>

namespace mfo {

Latency Latency::Affine(double a, double b) {
  Latency l;
  l.kind = Kind::kAffine;
  l.a = a;
  l.b = b;
  l.Validate();
  return l;
}

Latency Latency::Bpr(double t0, double beta, double cap, double power) {
  Latency l;
  l.kind = Kind::kBpr;
  l.t0 = t0;
  l.beta = beta;
  l.cap = cap;
  l.power = power;
  l.Validate();
  return l;
}

void Latency::Validate() const {
  if (kind == Kind::kAffine) {
    if (!(a >= 0.0 && b >= 0.0)) throw MfoError("affine latency needs a >= 0 and b >= 0");
  } else {
    if (!(t0 >= 0.0 && beta >= 0.0 && cap > 0.0 && power >= 1.0))
      throw MfoError("BPR latency needs t0, beta >= 0, cap > 0 and power >= 1");
  }
}

double Latency::operator()(double q) const {
  if (kind == Kind::kAffine) return a * q + b;
  return t0 * (1.0 + beta * std::pow(std::max(q, 0.0) / cap, power));
}

double Latency::Integral(double q) const {
  if (kind == Kind::kAffine) return 0.5 * a * q * q + b * q;
  const double qp = std::max(q, 0.0);
  return t0 * (q + beta * cap * std::pow(qp / cap, power + 1.0) / (power + 1.0));
}

double Latency::Slope(double q) const {
  if (kind == Kind::kAffine) return a;
  return t0 * beta * power * std::pow(std::max(q, 0.0) / cap, power - 1.0) / cap;
}

namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    out.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
  }
  return out;
}

// Lines to parse: those whose first non-blank character is a digit.
std::vector<std::pair<int, std::vector<std::string>>> ReadRows(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw MfoError("cannot open '" + file + "'");
  std::vector<std::pair<int, std::vector<std::string>>> rows;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || !std::isdigit(static_cast<unsigned char>(line[first])))
      continue;
    rows.emplace_back(number, SplitCsv(line));
  }
  return rows;
}

double ParseNumber(const std::string& text, const std::string& file, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw MfoError(file + ":" + std::to_string(line) + ": bad number '" + text + "'");
}

int ParseNode(const std::string& text, const std::string& file, int line) {
  const double v = ParseNumber(text, file, line);
  if (v < 0.0 || v != std::floor(v)) throw MfoError(file + ":" + std::to_string(line) + ": bad node id '" + text + "'");
  return static_cast<int>(v);
}

}  // namespace

TrafficNetwork LoadNetwork(const std::string& edge_file, const std::string& od_file,
                           int max_hops) {
  TrafficNetwork net;
  net.max_hops = max_hops;
  int max_node = -1;
  for (const auto& [line, cells] : ReadRows(edge_file)) {
    const std::string where = edge_file + ":" + std::to_string(line);
    if (cells.size() < 3) throw MfoError(where + ": expected from,to,phi_kind,coeffs...");
    TrafficEdge e;
    e.from = ParseNode(cells[0], edge_file, line);
    e.to = ParseNode(cells[1], edge_file, line);
    std::vector<double> k;
    for (std::size_t i = 3; i < cells.size(); ++i) k.push_back(ParseNumber(cells[i], edge_file, line));
    if (cells[2] == "affine") {
      if (k.size() != 2) throw MfoError(where + ": affine latency takes a,b");
      e.latency = Latency::Affine(k[0], k[1]);
    } else if (cells[2] == "bpr") {
      if (k.size() != 4) throw MfoError(where + ": bpr latency takes t0,beta,cap,power");
      e.latency = Latency::Bpr(k[0], k[1], k[2], k[3]);
    } else {
      throw MfoError(where + ": unknown latency kind '" + cells[2] + "'");
    }
    max_node = std::max({max_node, e.from, e.to});
    net.edges.push_back(e);
  }
  for (const auto& [line, cells] : ReadRows(od_file)) {
    if (cells.size() != 3) throw MfoError(od_file + ":" + std::to_string(line) + ": expected origin,destination,demand");
    OdPair od;
    od.origin = ParseNode(cells[0], od_file, line);
    od.destination = ParseNode(cells[1], od_file, line);
    od.demand = ParseNumber(cells[2], od_file, line);
    max_node = std::max({max_node, od.origin, od.destination});
    net.od_pairs.push_back(od);
  }
  net.num_nodes = max_node + 1;
  return net;
}

TrafficNetwork PigouNetwork() {
  TrafficNetwork net;
  net.num_nodes = 2;
  net.edges = {{0, 1, Latency::Affine(1.0, 0.0)}, {0, 1, Latency::Affine(0.0, 1.0)}};
  net.od_pairs = {{0, 1, 1.0}};
  net.max_hops = 1;
  return net;
}

TrafficNetwork GridNetwork() {
  TrafficNetwork net;
  net.num_nodes = 6;
  net.edges = {
      {0, 1, Latency::Affine(1.0, 0.1)},  {1, 2, Latency::Affine(0.5, 0.2)},
      {3, 4, Latency::Affine(1.0, 0.1)},  {4, 5, Latency::Affine(0.5, 0.2)},
      {0, 3, Latency::Affine(0.2, 0.3)},  {1, 4, Latency::Affine(0.3, 0.1)},
      {2, 5, Latency::Affine(0.2, 0.3)},  {0, 4, Latency::Bpr(0.4, 0.15, 0.5, 4.0)},
      {1, 5, Latency::Bpr(0.5, 0.15, 0.5, 4.0)}, {3, 1, Latency::Affine(1.0, 0.0)},
  };
  net.od_pairs = {{0, 5, 0.5}, {3, 5, 0.3}, {0, 2, 0.2}};
  net.max_hops = 4;
  return net;
}

TrafficProblem::TrafficProblem(TrafficNetwork network)
    : network_(std::move(network)), metric_(Metric::Euclidean()) {
  const int n = network_.num_nodes;
  if (n < 1 || network_.edges.empty()) throw MfoError("traffic: empty network");
  if (network_.od_pairs.empty()) throw MfoError("traffic: no OD pairs");
  if (network_.max_hops < 1) throw MfoError("traffic: hop bound must be >= 1");
  for (const TrafficEdge& e : network_.edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) throw MfoError("traffic: edge endpoint out of range");
    e.latency.Validate();
  }
  double total = 0.0;
  for (std::size_t i = 0; i < network_.od_pairs.size(); ++i) {
    const OdPair& od = network_.od_pairs[i];
    if (od.origin < 0 || od.origin >= n || od.destination < 0 || od.destination >= n || od.origin == od.destination)
      throw MfoError("traffic: bad OD pair");
    if (!(od.demand > 0.0)) throw MfoError("traffic: OD demand must be positive");
    if (!od_index_.emplace(std::make_pair(od.origin, od.destination), i).second)
      throw MfoError("traffic: duplicate OD pair");
    total += od.demand;
  }
  for (OdPair& od : network_.od_pairs) od.demand /= total;

  weights_ = std::make_shared<const Vector>(Vector::Ones(static_cast<Eigen::Index>(num_edges())));
  EnumeratePaths();

  // Undirected hop distances; disconnected pairs sit n hops apart.
  Eigen::MatrixXd hops = Eigen::MatrixXd::Constant(n, n, static_cast<double>(n));
  std::vector<std::vector<int>> adj(n);
  for (const TrafficEdge& e : network_.edges) {
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  for (int s = 0; s < n; ++s) {
    std::vector<int> dist(n, -1);
    std::queue<int> frontier;
    dist[s] = 0;
    frontier.push(s);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      hops(s, u) = dist[u];
      for (int v : adj[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          frontier.push(v);
        }
    }
  }
  metric_ = Metric::GraphHop(std::move(hops));
  ComputeConstants();
}

void TrafficProblem::EnumeratePaths() {
  const int n = network_.num_nodes;
  std::vector<std::vector<int>> out_edges(n);
  for (std::size_t e = 0; e < num_edges(); ++e) out_edges[network_.edges[e].from].push_back(static_cast<int>(e));

  paths_.assign(network_.od_pairs.size(), {});
  for (std::size_t i = 0; i < network_.od_pairs.size(); ++i) {
    const OdPair& od = network_.od_pairs[i];
    std::vector<char> visited(n, 0);
    Path current;
    // Depth-first over simple paths with at most max_hops edges.
    auto dfs = [&](auto&& self, int node) -> void {
      if (node == od.destination) {
        paths_[i].push_back(current);
        return;
      }
      if (static_cast<int>(current.size()) >= network_.max_hops) return;
      visited[node] = 1;
      for (int e : out_edges[node]) {
        const int next = network_.edges[e].to;
        if (visited[next]) continue;
        current.push_back(e);
        self(self, next);
        current.pop_back();
      }
      visited[node] = 0;
    };
    dfs(dfs, od.origin);
    if (paths_[i].empty())
      throw MfoError("traffic: OD pair (" + std::to_string(od.origin) + ", " +
                     std::to_string(od.destination) + ") has no admissible path");
    std::sort(paths_[i].begin(), paths_[i].end());
  }
}

void TrafficProblem::ComputeConstants() {
  ProblemConstants c;
  double sq = 0.0;
  for (const TrafficEdge& e : network_.edges) {
    // phi' is non-decreasing for affine and BPR with power >= 1.
    c.lipschitz_grad = std::max(c.lipschitz_grad, e.latency.Slope(1.0));
    sq += std::pow(e.latency(1.0), 2);
  }
  c.grad_bound = std::sqrt(sq);
  std::vector<Vector> all;
  std::size_t longest = 0;
  for (const auto& list : paths_)
    for (const Path& p : list) {
      all.push_back(Indicator(p));
      longest = std::max(longest, p.size());
    }
  c.g_bound = std::sqrt(static_cast<double>(longest));
  double diameter = 0.0;
  for (std::size_t a = 0; a < all.size(); ++a)
    for (std::size_t b = a + 1; b < all.size(); ++b)
      diameter = std::max(diameter, (all[a] - all[b]).squaredNorm());
  c.g_diameter_sq = diameter;
  // Distinct OD pairs are at least one hop apart.
  c.lipschitz_set = std::sqrt(diameter);
  constants_ = c;
}

std::size_t TrafficProblem::OdIndex(const Vector& x) const {
  if (x.size() != 2) throw MfoError("traffic: parameter must be an (origin, destination) pair");
  const auto it = od_index_.find({static_cast<int>(std::lround(x[0])), static_cast<int>(std::lround(x[1]))});
  if (it == od_index_.end()) throw MfoError("traffic: unknown OD pair");
  return it->second;
}

Vector TrafficProblem::Indicator(const Path& path) const {
  Vector y = Vector::Zero(static_cast<Eigen::Index>(num_edges()));
  for (int e : path) y[e] = 1.0;
  return y;
}

EmpiricalMeasure TrafficProblem::DemandMeasure() const {
  std::vector<Atom> atoms;
  for (const OdPair& od : network_.od_pairs) {
    Vector x(2);
    x << od.origin, od.destination;
    atoms.push_back(Atom{x, Vector(), od.demand});
  }
  return EmpiricalMeasure(Space::kX, std::move(atoms));
}

const Path& TrafficProblem::ShortestPath(const Vector& edge_costs, std::size_t od) const {
  const auto& list = paths_.at(od);
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < list.size(); ++p) {
    double cost = 0.0;
    for (int e : list[p]) cost += edge_costs[e];
    // Strict comparison keeps the lexicographically first among ties.
    if (cost < best_cost) {
      best_cost = cost;
      best = p;
    }
  }
  return list[best];
}

Vector TrafficProblem::PotentialGrad(const Vector& flow) const {
  Vector out(flow.size());
  for (Eigen::Index e = 0; e < flow.size(); ++e) out[e] = network_.edges[e].latency(flow[e]);
  return out;
}

Vector TrafficProblem::g(const Vector& x, const Vector& y) const {
  (void)x;
  if (y.size() != static_cast<Eigen::Index>(num_edges())) throw MfoError("traffic: decision has the wrong length");
  return y;
}

double TrafficProblem::f_value(const Aggregate& beta) const {
  double v = 0.0;
  for (std::size_t e = 0; e < num_edges(); ++e) v += network_.edges[e].latency.Integral(beta[e]);
  return v;
}

Aggregate TrafficProblem::f_grad(const Aggregate& beta) const {
  return Aggregate(PotentialGrad(beta.values()), weights_);
}

std::optional<double> TrafficProblem::f_conj(const Aggregate& lambda) const {
  double v = 0.0;
  for (std::size_t e = 0; e < num_edges(); ++e) {
    const Latency& l = network_.edges[e].latency;
    if (l.kind != Latency::Kind::kAffine) return std::nullopt;
    const double shift = lambda[e] - l.b;
    if (l.a > 0.0) v += shift * shift / (2.0 * l.a);
    else if (std::abs(shift) > 1e-12) return std::numeric_limits<double>::infinity();
  }
  return v;
}

Vector TrafficProblem::best_response(const Aggregate& lambda, const Vector& x) const {
  return Indicator(ShortestPath(lambda.values(), OdIndex(x)));
}

bool TrafficProblem::feasible(const Vector& x, const Vector& y) const {
  if (x.size() != 2 || y.size() != static_cast<Eigen::Index>(num_edges())) return false;
  const auto it = od_index_.find({static_cast<int>(std::lround(x[0])), static_cast<int>(std::lround(x[1]))});
  if (it == od_index_.end()) return false;
  for (const Path& p : paths_[it->second])
    if (NearlyEqual(Indicator(p), y)) return true;
  return false;
}

Vector TrafficProblem::transport_select(const Vector& x, const Vector& y,
                                        const Vector& x_target) const {
  if (OdIndex(x) == OdIndex(x_target)) return y;
  return Indicator(paths_[OdIndex(x_target)].front());
}

Vector TrafficProblem::initial_decision(const Vector& x) const {
  return Indicator(paths_[OdIndex(x)].front());
}

}  // namespace mfo
