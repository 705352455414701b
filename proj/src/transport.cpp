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

#include "mfo/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include <Eigen/Core>

namespace mfo {

namespace {

void RequireOnX(const EmpiricalMeasure& m, const char* what) {
  if (m.space() != Space::kX)
    throw MfoError(std::string(what) + ": transport works on measures over X");
}

Eigen::MatrixXd CostMatrix(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1,
                           const Metric& metric) {
  Eigen::MatrixXd cost(m0.size(), m1.size());
  for (std::size_t i = 0; i < m0.size(); ++i)
    for (std::size_t j = 0; j < m1.size(); ++j) {
      const double d = metric(m0[i].x, m1[j].x);
      if (!std::isfinite(d) || d < 0.0) throw MfoError("metric returned an invalid distance");
      cost(i, j) = d;
    }
  return cost;
}

void Finalize(Coupling& plan, const Eigen::MatrixXd& cost) {
  std::sort(plan.entries.begin(), plan.entries.end(),
            [](const CouplingEntry& a, const CouplingEntry& b) {
              return a.source != b.source ? a.source < b.source : a.target < b.target;
            });
  plan.cost = 0.0;
  for (const CouplingEntry& e : plan.entries) plan.cost += cost(e.source, e.target) * e.mass;
}

// Transportation simplex with a spanning-tree basis of m + n - 1 cells.
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                   const Eigen::MatrixXd& cost)
      : m_(supply.size()), n_(demand.size()), cost_(cost),
        flow_(Eigen::MatrixXd::Zero(m_, n_)),
        basic_(static_cast<std::size_t>(m_ * n_), 0) {
    NorthWestStart(supply, demand);
  }

  void Run() {
    const double scale = std::max(1.0, cost_.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    int degenerate_streak = 0;
    const long max_pivots = 50L * (m_ + n_) * (m_ + n_) + 1000;
    for (long pivot = 0; pivot < max_pivots; ++pivot) {
      ComputePotentials();
      Eigen::Index ei = -1, ej = -1;
      double best = -tol;
      const bool bland = degenerate_streak > 20;
      for (Eigen::Index i = 0; i < m_ && !(bland && ei >= 0); ++i)
        for (Eigen::Index j = 0; j < n_; ++j) {
          if (IsBasic(i, j)) continue;
          const double reduced = cost_(i, j) - u_[i] - v_[j];
          if (reduced < best) {
            best = reduced;
            ei = i;
            ej = j;
            if (bland) break;
          }
        }
      if (ei < 0) return;
      const double theta = Pivot(ei, ej);
      degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
    }
    throw MfoError("transport simplex did not converge");
  }

  const Eigen::MatrixXd& flow() const { return flow_; }
  bool IsBasic(Eigen::Index i, Eigen::Index j) const {
    return basic_[static_cast<std::size_t>(i * n_ + j)] != 0;
  }

 private:
  void SetBasic(Eigen::Index i, Eigen::Index j, bool on) {
    basic_[static_cast<std::size_t>(i * n_ + j)] = on ? 1 : 0;
    if (on) {
      cells_.push_back({i, j});
    } else {
      cells_.erase(std::find(cells_.begin(), cells_.end(), std::pair{i, j}));
    }
  }

  void NorthWestStart(Eigen::VectorXd supply, Eigen::VectorXd demand) {
    Eigen::Index i = 0, j = 0;
    while (true) {
      const double q = std::max(0.0, std::min(supply[i], demand[j]));
      flow_(i, j) = q;
      SetBasic(i, j, true);
      supply[i] -= q;
      demand[j] -= q;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1) {
        ++j;
      } else if (j == n_ - 1) {
        ++i;
      } else if (supply[i] <= demand[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Tree nodes: rows 0..m-1, columns m..m+n-1.
  void BuildAdjacency() {
    adjacency_.assign(static_cast<std::size_t>(m_ + n_), {});
    for (const auto& [i, j] : cells_) {
      adjacency_[static_cast<std::size_t>(i)].push_back(m_ + j);
      adjacency_[static_cast<std::size_t>(m_ + j)].push_back(i);
    }
  }

  void ComputePotentials() {
    BuildAdjacency();
    u_.assign(static_cast<std::size_t>(m_), 0.0);
    v_.assign(static_cast<std::size_t>(n_), 0.0);
    std::vector<char> seen(static_cast<std::size_t>(m_ + n_), 0);
    std::queue<Eigen::Index> queue;
    queue.push(0);
    seen[0] = 1;
    while (!queue.empty()) {
      const Eigen::Index node = queue.front();
      queue.pop();
      for (Eigen::Index next : adjacency_[static_cast<std::size_t>(node)]) {
        if (seen[static_cast<std::size_t>(next)]) continue;
        seen[static_cast<std::size_t>(next)] = 1;
        if (node < m_) {
          v_[static_cast<std::size_t>(next - m_)] = cost_(node, next - m_) - u_[static_cast<std::size_t>(node)];
        } else {
          u_[static_cast<std::size_t>(next)] = cost_(next, node - m_) - v_[static_cast<std::size_t>(node - m_)];
        }
        queue.push(next);
      }
    }
  }

  // Brings (ei, ej) into the basis; returns the step length.
  double Pivot(Eigen::Index ei, Eigen::Index ej) {
    // Tree path from column ej to row ei.
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(m_ + n_), -1);
    std::queue<Eigen::Index> queue;
    const Eigen::Index start = m_ + ej;
    parent[static_cast<std::size_t>(start)] = start;
    queue.push(start);
    while (!queue.empty()) {
      const Eigen::Index node = queue.front();
      queue.pop();
      if (node == ei) break;
      for (Eigen::Index next : adjacency_[static_cast<std::size_t>(node)]) {
        if (parent[static_cast<std::size_t>(next)] >= 0) continue;
        parent[static_cast<std::size_t>(next)] = node;
        queue.push(next);
      }
    }
    // Walk from row ei towards column ej; cells alternate -, +, -, ...
    std::vector<std::pair<Eigen::Index, Eigen::Index>> path;
    for (Eigen::Index node = ei; node != start;) {
      const Eigen::Index up = parent[static_cast<std::size_t>(node)];
      if (node < m_) {
        path.push_back({node, up - m_});
      } else {
        path.push_back({up, node - m_});
      }
      node = up;
    }
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = 0;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const double f = flow_(path[k].first, path[k].second);
      if (f < theta) {
        theta = f;
        leaving = k;
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      double& f = flow_(path[k].first, path[k].second);
      f += (k % 2 == 0) ? -theta : theta;
      if (f < 0.0) f = 0.0;
    }
    flow_(path[leaving].first, path[leaving].second) = 0.0;
    SetBasic(path[leaving].first, path[leaving].second, false);
    flow_(ei, ej) = theta;
    SetBasic(ei, ej, true);
    return theta;
  }

  Eigen::Index m_, n_;
  const Eigen::MatrixXd& cost_;
  Eigen::MatrixXd flow_;
  std::vector<char> basic_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells_;
  std::vector<std::vector<Eigen::Index>> adjacency_;
  std::vector<double> u_, v_;
};

Eigen::VectorXd Weights(const EmpiricalMeasure& m) {
  Eigen::VectorXd w(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) w[i] = m[i].w;
  return w;
}

}  // namespace

double Coupling::MarginalResidual() const {
  std::vector<double> rows(source.size(), 0.0), cols(target.size(), 0.0);
  for (const CouplingEntry& e : entries) {
    rows[e.source] += e.mass;
    cols[e.target] += e.mass;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) worst = std::max(worst, std::abs(rows[i] - source[i].w));
  for (std::size_t j = 0; j < cols.size(); ++j) worst = std::max(worst, std::abs(cols[j] - target[j].w));
  return worst;
}

Coupling OtSolveSimplex(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1,
                        const Metric& metric) {
  RequireOnX(m0, "ot_solve");
  RequireOnX(m1, "ot_solve");
  const Eigen::MatrixXd cost = CostMatrix(m0, m1, metric);
  TransportSimplex simplex(Weights(m0), Weights(m1), cost);
  simplex.Run();
  Coupling plan{m0, m1, {}, 0.0};
  const Eigen::MatrixXd& flow = simplex.flow();
  for (Eigen::Index i = 0; i < flow.rows(); ++i)
    for (Eigen::Index j = 0; j < flow.cols(); ++j)
      if (flow(i, j) > 0.0)
        plan.entries.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), flow(i, j)});
  Finalize(plan, cost);
  return plan;
}

Coupling OtSolveLine(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1) {
  RequireOnX(m0, "ot_solve");
  RequireOnX(m1, "ot_solve");
  auto order = [](const EmpiricalMeasure& m) {
    for (const Atom& a : m.atoms())
      if (a.x.size() != 1) throw MfoError("line transport needs one-dimensional points");
    std::vector<std::size_t> idx(m.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&m](std::size_t a, std::size_t b) { return m[a].x[0] < m[b].x[0]; });
    return idx;
  };
  const std::vector<std::size_t> s = order(m0), t = order(m1);
  Coupling plan{m0, m1, {}, 0.0};
  std::size_t a = 0, b = 0;
  double ra = m0[s[0]].w, rb = m1[t[0]].w;
  while (a < s.size() && b < t.size()) {
    const bool last = (a + 1 == s.size() && b + 1 == t.size());
    const double q = last ? std::max(ra, rb) : std::min(ra, rb);
    if (q > 0.0) plan.entries.push_back({s[a], t[b], q});
    if (last) break;
    ra -= q;
    rb -= q;
    if ((ra <= rb && a + 1 < s.size()) || b + 1 == t.size()) {
      ++a;
      rb = std::max(rb, 0.0);
      ra = m0[s[a]].w;
    } else {
      ++b;
      ra = std::max(ra, 0.0);
      rb = m1[t[b]].w;
    }
  }
  Eigen::MatrixXd cost(m0.size(), m1.size());
  for (std::size_t i = 0; i < m0.size(); ++i)
    for (std::size_t j = 0; j < m1.size(); ++j) cost(i, j) = std::abs(m0[i].x[0] - m1[j].x[0]);
  Finalize(plan, cost);
  return plan;
}

Coupling OtSolve(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1,
                 const Metric& metric) {
  RequireOnX(m0, "ot_solve");
  RequireOnX(m1, "ot_solve");
  bool line = metric.IsLine(1);
  for (const Atom& a : m0.atoms()) line = line && a.x.size() == 1;
  for (const Atom& a : m1.atoms()) line = line && a.x.size() == 1;
  return line ? OtSolveLine(m0, m1) : OtSolveSimplex(m0, m1, metric);
}

Assignment AssignmentSolve(const EmpiricalMeasure& m0, const EmpiricalMeasure& m1,
                           const Metric& metric) {
  RequireOnX(m0, "assignment_solve");
  RequireOnX(m1, "assignment_solve");
  if (m0.size() != m1.size()) throw MfoError("assignment_solve: support sizes differ");
  if (!m0.IsUniform(1e-12) || !m1.IsUniform(1e-12))
    throw MfoError("assignment_solve: measures must have equal weights");
  const std::size_t n = m0.size();
  const Eigen::MatrixXd cost = CostMatrix(m0, m1, metric);
  const double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting path Hungarian method; index 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  out.permutation.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.permutation[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.cost += cost(i, out.permutation[i]);
  out.cost /= static_cast<double>(n);
  return out;
}

EmpiricalMeasure GluedMeasure::ProjectZ() const {
  AtomAccumulator acc(Space::kZ);
  for (const GluedAtom& a : atoms) acc.Add(a.x, a.y, a.w);
  return acc.Build();
}

EmpiricalMeasure GluedMeasure::ProjectTarget() const {
  AtomAccumulator acc(Space::kX);
  for (const GluedAtom& a : atoms) acc.Add(a.x_target, Vector(), a.w);
  return acc.Build();
}

GluedMeasure Glue(const EmpiricalMeasure& mu0, const Coupling& rho) {
  if (mu0.space() != Space::kZ) throw MfoError("glue: mu0 must be a measure on Z");
  if (rho.MarginalResidual() > kMarginalTol) throw MfoError("glue: coupling marginals are inconsistent");
  std::vector<Vector> xs, none(rho.source.size());
  AtomIndex index;
  for (std::size_t i = 0; i < rho.source.size(); ++i) {
    xs.push_back(rho.source[i].x);
    index.Insert(rho.source[i].x, Vector(), i);
  }
  std::vector<std::size_t> slot_of(mu0.size());
  std::vector<double> mass(rho.source.size(), 0.0);
  for (std::size_t k = 0; k < mu0.size(); ++k) {
    const std::size_t slot = index.Find(mu0[k].x, Vector(), xs, none);
    if (slot == AtomIndex::npos) throw MfoError("glue: mu0 has mass outside the coupling source");
    slot_of[k] = slot;
    mass[slot] += mu0[k].w;
  }
  for (std::size_t i = 0; i < mass.size(); ++i)
    if (std::abs(mass[i] - rho.source[i].w) > kMarginalTol)
      throw MfoError("glue: first marginal of mu0 differs from the coupling source");

  std::vector<std::vector<const CouplingEntry*>> rows(rho.source.size());
  for (const CouplingEntry& e : rho.entries) rows[e.source].push_back(&e);
  GluedMeasure nu;
  for (std::size_t k = 0; k < mu0.size(); ++k) {
    const std::size_t i = slot_of[k];
    const double source_w = rho.source[i].w;
    if (source_w <= 0.0) continue;
    for (const CouplingEntry* e : rows[i]) {
      const double w = mu0[k].w * e->mass / source_w;
      if (w > 0.0) nu.atoms.push_back(GluedAtom{mu0[k].x, mu0[k].y, rho.target[e->target].x, w});
    }
  }
  return nu;
}

BridgeResult Bridge(const EmpiricalMeasure& mu0, const EmpiricalMeasure& m1,
                    const Problem& problem) {
  const EmpiricalMeasure m0 = FirstMarginal(mu0);
  Coupling rho = OtSolve(m0, m1, problem.metric());
  const GluedMeasure nu = Glue(mu0, rho);
  AtomAccumulator acc(Space::kZ);
  for (const GluedAtom& a : nu.atoms) {
    Vector y = problem.transport_select(a.x, a.y, a.x_target);
    if (!problem.feasible(a.x_target, y))
      throw MfoError("bridge: transport selection returned an infeasible decision");
    acc.Add(a.x_target, y, a.w);
  }
  const double d1 = rho.cost;
  return BridgeResult{acc.Build(), std::move(rho), d1};
}

nlohmann::json ToJson(const Coupling& coupling) {
  nlohmann::json entries = nlohmann::json::array();
  for (const CouplingEntry& e : coupling.entries)
    entries.push_back(nlohmann::json::array({e.source, e.target, e.mass}));
  return nlohmann::json{{"cost", coupling.cost}, {"entries", entries}};
}

}  // namespace mfo
