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

#include "mfo/measures.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace mfo {

std::string ToString(Space space) {
  switch (space) {
    case Space::kX:
      return "X";
    case Space::kY:
      return "Y";
    case Space::kZ:
      return "Z";
  }
  return "?";
}

Space SpaceFromString(const std::string& name) {
  if (name == "X") return Space::kX;
  if (name == "Y") return Space::kY;
  if (name == "Z") return Space::kZ;
  throw MfoError("unknown measure space '" + name + "'");
}

bool SamePoint(const Atom& a, const Atom& b, double tol) {
  return NearlyEqual(a.x, b.x, tol) && NearlyEqual(a.y, b.y, tol);
}

EmpiricalMeasure::EmpiricalMeasure(Space space, std::vector<Atom> atoms)
    : space_(space), atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw MfoError("measure must have at least one atom");
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (!std::isfinite(a.w) || a.w < 0.0)
      throw MfoError("atom weight must be finite and nonnegative");
    if (!AllFinite(a.x) || !AllFinite(a.y))
      throw MfoError("atom coordinates must be finite");
    if (space_ == Space::kX && a.y.size() != 0)
      throw MfoError("atoms of a measure on X carry no decision");
    total += a.w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw MfoError("measure weights sum to " + std::to_string(total) +
                   ", expected 1");
  for (Atom& a : atoms_) a.w /= total;
}

EmpiricalMeasure EmpiricalMeasure::Dirac(Space space, Vector x, Vector y) {
  return EmpiricalMeasure(space, {Atom{std::move(x), std::move(y), 1.0}});
}

EmpiricalMeasure EmpiricalMeasure::UniformOnX(
    const std::vector<Vector>& points) {
  if (points.empty()) throw MfoError("need at least one point");
  const double w = 1.0 / static_cast<double>(points.size());
  std::vector<Atom> atoms;
  atoms.reserve(points.size());
  for (const Vector& p : points) atoms.push_back(Atom{p, Vector(), w});
  return EmpiricalMeasure(Space::kX, std::move(atoms));
}

double EmpiricalMeasure::TotalWeight() const {
  double total = 0.0;
  for (const Atom& a : atoms_) total += a.w;
  return total;
}

bool EmpiricalMeasure::IsUniform(double tol) const {
  if (atoms_.empty()) return false;
  const double w = 1.0 / static_cast<double>(atoms_.size());
  for (const Atom& a : atoms_)
    if (std::abs(a.w - w) > tol) return false;
  return true;
}

EmpiricalMeasure EmpiricalMeasure::Merged() const {
  AtomAccumulator acc(space_);
  for (const Atom& a : atoms_) acc.Add(a.x, a.y, a.w);
  return acc.Build();
}

bool EmpiricalMeasure::AllFeasible(
    const std::function<bool(const Vector&, const Vector&)>& feasible) const {
  for (const Atom& a : atoms_)
    if (!feasible(a.x, a.y)) return false;
  return true;
}

EmpiricalMeasure FirstMarginal(const EmpiricalMeasure& mu) {
  AtomAccumulator acc(Space::kX);
  for (const Atom& a : mu.atoms()) acc.Add(a.x, Vector(), a.w);
  return acc.Build();
}

ConditionalFamily Disintegrate(const EmpiricalMeasure& mu) {
  if (mu.space() != Space::kZ)
    throw MfoError("disintegration needs a measure on Z");
  const EmpiricalMeasure merged = mu.Merged();
  std::vector<Vector> keys;
  std::vector<std::vector<Atom>> groups;
  AtomIndex index;
  const Vector none;
  std::vector<Vector> empty_ys;
  for (const Atom& a : merged.atoms()) {
    std::size_t slot = index.Find(a.x, none, keys, empty_ys);
    if (slot == AtomIndex::npos) {
      slot = keys.size();
      keys.push_back(a.x);
      empty_ys.emplace_back();
      groups.emplace_back();
      index.Insert(a.x, none, slot);
    }
    groups[slot].push_back(Atom{Vector(), a.y, a.w});
  }
  ConditionalFamily family;
  family.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    double weight = 0.0;
    for (const Atom& a : groups[i]) weight += a.w;
    std::vector<Atom> cond = groups[i];
    if (weight > 0.0) {
      for (Atom& a : cond) a.w /= weight;
    } else {
      // Zero-mass parameter: any conditional works; keep the first decision.
      cond = {Atom{Vector(), groups[i].front().y, 1.0}};
    }
    family.push_back(ConditionalEntry{
        keys[i], weight, EmpiricalMeasure(Space::kY, std::move(cond))});
  }
  return family;
}

EmpiricalMeasure Recompose(const ConditionalFamily& family) {
  AtomAccumulator acc(Space::kZ);
  for (const ConditionalEntry& e : family)
    for (const Atom& a : e.conditional.atoms())
      acc.Add(e.x, a.y, e.weight * a.w);
  return acc.Build();
}

EmpiricalMeasure Mix(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                     double omega) {
  if (a.space() != b.space()) throw MfoError("cannot mix measures on different spaces");
  if (!(omega >= 0.0 && omega <= 1.0)) throw MfoError("mixing weight must lie in [0, 1]");
  AtomAccumulator acc(a.space());
  if (omega < 1.0)
    for (const Atom& atom : a.atoms()) acc.Add(atom.x, atom.y, (1.0 - omega) * atom.w);
  if (omega > 0.0)
    for (const Atom& atom : b.atoms()) acc.Add(atom.x, atom.y, omega * atom.w);
  return acc.Build();
}

EmpiricalMeasure PushForward(const EmpiricalMeasure& mu, const AtomMap& map) {
  return PushForward(mu, map, mu.space());
}

EmpiricalMeasure PushForward(const EmpiricalMeasure& mu, const AtomMap& map,
                             Space target_space) {
  AtomAccumulator acc(target_space);
  for (const Atom& a : mu.atoms()) {
    auto [x, y] = map(a);
    acc.Add(x, y, a.w);
  }
  return acc.Build();
}

namespace {

std::size_t HashCombine(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t HashCoords(std::size_t seed, const Vector& v) {
  seed = HashCombine(seed, static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const long long bucket = std::llround(v[i] * 1e9);
    seed = HashCombine(seed, std::hash<long long>{}(bucket));
  }
  return seed;
}

}  // namespace

std::size_t AtomIndex::Key(const Vector& x, const Vector& y) {
  return HashCoords(HashCoords(0x51ed27, x), y);
}

std::size_t AtomIndex::Find(const Vector& x, const Vector& y,
                            const std::vector<Vector>& xs,
                            const std::vector<Vector>& ys) const {
  auto it = buckets_.find(Key(x, y));
  if (it == buckets_.end()) return npos;
  for (std::size_t slot : it->second)
    if (NearlyEqual(xs[slot], x) && NearlyEqual(ys[slot], y)) return slot;
  return npos;
}

void AtomIndex::Insert(const Vector& x, const Vector& y, std::size_t slot) {
  buckets_[Key(x, y)].push_back(slot);
}

void AtomAccumulator::Add(const Vector& x, const Vector& y, double weight) {
  const std::size_t slot = index_.Find(x, y, xs_, ys_);
  if (slot != AtomIndex::npos) {
    stored_[slot] += weight / scale_;
    return;
  }
  index_.Insert(x, y, xs_.size());
  xs_.push_back(x);
  ys_.push_back(y);
  stored_.push_back(weight / scale_);
}

void AtomAccumulator::Scale(double factor) {
  if (!(factor > 0.0)) throw MfoError("accumulator scale must be positive");
  scale_ *= factor;
  if (scale_ < 1e-200) {
    // Fold the factor in before it underflows.
    for (double& w : stored_) w *= scale_;
    scale_ = 1.0;
  }
}

EmpiricalMeasure AtomAccumulator::Build() const {
  std::vector<Atom> atoms;
  atoms.reserve(xs_.size());
  for (std::size_t i = 0; i < xs_.size(); ++i)
    atoms.push_back(Atom{xs_[i], ys_[i], stored_[i] * scale_});
  return EmpiricalMeasure(space_, std::move(atoms));
}

nlohmann::json VectorToJson(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector VectorFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw MfoError("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw MfoError("expected a numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

nlohmann::json ToJson(const EmpiricalMeasure& mu) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const Atom& a : mu.atoms()) {
    nlohmann::json atom;
    if (mu.space() != Space::kY) atom["x"] = VectorToJson(a.x);
    if (mu.space() != Space::kX) atom["y"] = VectorToJson(a.y);
    atom["w"] = a.w;
    atoms.push_back(std::move(atom));
  }
  return nlohmann::json{{"space", ToString(mu.space())}, {"atoms", atoms}};
}

EmpiricalMeasure MeasureFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("space") || !j.contains("atoms"))
    throw MfoError("measure JSON needs 'space' and 'atoms'");
  const Space space = SpaceFromString(j.at("space").get<std::string>());
  std::vector<Atom> atoms;
  for (const auto& entry : j.at("atoms")) {
    Atom a;
    if (entry.contains("x")) a.x = VectorFromJson(entry.at("x"));
    if (entry.contains("y")) a.y = VectorFromJson(entry.at("y"));
    if (!entry.contains("w")) throw MfoError("atom without weight 'w'");
    a.w = entry.at("w").get<double>();
    atoms.push_back(std::move(a));
  }
  return EmpiricalMeasure(space, std::move(atoms));
}

void WriteCsv(std::ostream& out, const EmpiricalMeasure& mu) {
  const Eigen::Index dx = mu.empty() ? 0 : mu[0].x.size();
  const Eigen::Index dy = mu.empty() ? 0 : mu[0].y.size();
  for (Eigen::Index i = 0; i < dx; ++i) out << 'x' << i << ',';
  for (Eigen::Index i = 0; i < dy; ++i) out << 'y' << i << ',';
  out << "w\n";
  out << std::setprecision(17);
  for (const Atom& a : mu.atoms()) {
    for (Eigen::Index i = 0; i < a.x.size(); ++i) out << a.x[i] << ',';
    for (Eigen::Index i = 0; i < a.y.size(); ++i) out << a.y[i] << ',';
    out << a.w << '\n';
  }
}

}  // namespace mfo
