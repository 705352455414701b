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

// Finitely supported probability measures over the parameter space X, the
// decision space Y and the graph Z = {(x, y) : y in Z_x}.
//
// Measures are immutable values with a stable atom order. Atoms whose x and
// y agree componentwise within kMergeTol are treated as the same point and
// merged by every operation that can create duplicates.

#ifndef MFO_MEASURES_HPP_
#define MFO_MEASURES_HPP_

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mfo/common.hpp"

namespace mfo {

enum class Space { kX, kY, kZ };

std::string ToString(Space space);
Space SpaceFromString(const std::string& name);

/// A weighted support point. For measures on X the decision is empty; for
/// measures on Y the parameter is empty.
struct Atom {
  Vector x;
  Vector y;
  double w = 0.0;
};

/// True when a and b denote the same support point.
bool SamePoint(const Atom& a, const Atom& b, double tol = kMergeTol);

class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;

  /// Validates weights (finite, nonnegative, total within 1e-9 of one) and
  /// rescales them so that the total is one to machine precision. Atoms are
  /// kept as given; call Merged() to collapse duplicates.
  EmpiricalMeasure(Space space, std::vector<Atom> atoms);

  static EmpiricalMeasure Dirac(Space space, Vector x, Vector y = Vector());
  /// Equal weights 1/N over the given parameter points.
  static EmpiricalMeasure UniformOnX(const std::vector<Vector>& points);

  Space space() const { return space_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double TotalWeight() const;

  /// True when every atom has weight 1/size() (within tol).
  bool IsUniform(double tol = 1e-12) const;

  /// Collapses atoms that denote the same point, keeping first-seen order.
  EmpiricalMeasure Merged() const;

  /// Feasibility check on request: predicate(x, y) for every Z atom.
  bool AllFeasible(
      const std::function<bool(const Vector&, const Vector&)>& feasible) const;

 private:
  Space space_ = Space::kX;
  std::vector<Atom> atoms_;
};

/// One entry of a disintegration: parameter point, its marginal weight and
/// the conditional distribution of decisions (a measure on Y).
struct ConditionalEntry {
  Vector x;
  double weight = 0.0;
  EmpiricalMeasure conditional;
};

using ConditionalFamily = std::vector<ConditionalEntry>;

EmpiricalMeasure FirstMarginal(const EmpiricalMeasure& mu);
ConditionalFamily Disintegrate(const EmpiricalMeasure& mu);
/// Inverse of Disintegrate: sum_x weight(x) * delta_x (x) conditional_x.
EmpiricalMeasure Recompose(const ConditionalFamily& family);

/// (1 - omega) * a + omega * b, duplicates merged.
EmpiricalMeasure Mix(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                     double omega);

using AtomMap = std::function<std::pair<Vector, Vector>(const Atom&)>;

/// Relocates each atom through map; weights travel with their atoms.
EmpiricalMeasure PushForward(const EmpiricalMeasure& mu, const AtomMap& map);
EmpiricalMeasure PushForward(const EmpiricalMeasure& mu, const AtomMap& map,
                             Space target_space);

/// Hash-bucketed lookup of support points. Buckets are 1e-9 wide, so two
/// atoms closer than kMergeTol share a bucket unless they straddle an edge.
class AtomIndex {
 public:
  /// Returns the slot of an existing point equal to (x, y), or npos.
  std::size_t Find(const Vector& x, const Vector& y,
                   const std::vector<Vector>& xs,
                   const std::vector<Vector>& ys) const;
  void Insert(const Vector& x, const Vector& y, std::size_t slot);

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  static std::size_t Key(const Vector& x, const Vector& y);
  std::unordered_map<std::size_t, std::vector<std::size_t>> buckets_;
};

/// Incremental builder for long mixing sequences. Scale() is O(1): weights
/// are stored relative to a running factor.
class AtomAccumulator {
 public:
  explicit AtomAccumulator(Space space) : space_(space) {}

  void Add(const Vector& x, const Vector& y, double weight);
  void Scale(double factor);
  std::size_t size() const { return xs_.size(); }
  EmpiricalMeasure Build() const;

 private:
  Space space_;
  std::vector<Vector> xs_;
  std::vector<Vector> ys_;
  std::vector<double> stored_;
  double scale_ = 1.0;
  AtomIndex index_;
};

// Serialization.
nlohmann::json ToJson(const EmpiricalMeasure& mu);
EmpiricalMeasure MeasureFromJson(const nlohmann::json& j);
nlohmann::json VectorToJson(const Vector& v);
Vector VectorFromJson(const nlohmann::json& j);
/// One atom per row: x0..,y0..,w
void WriteCsv(std::ostream& out, const EmpiricalMeasure& mu);

}  // namespace mfo

#endif  // MFO_MEASURES_HPP_
