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

#include "mfo/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <fstream>
#include <sstream>

#include "mfo/rng.hpp"
#include "mfo/transport.hpp"

namespace mfo {

namespace {

constexpr int kResamples = 5;

double ParseDouble(const std::string& text, const std::string& spec) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw MfoError("bad number '" + text + "' in distribution '" + spec + "'");
}

}  // namespace

SourceDistribution SourceDistribution::Uniform(double a, double b) {
  SourceDistribution d;
  d.kind = Kind::kUniform;
  d.a = a;
  d.b = b;
  d.Validate();
  return d;
}

SourceDistribution SourceDistribution::Exponential(double rate) {
  SourceDistribution d;
  d.kind = Kind::kExponential;
  d.rate = rate;
  d.Validate();
  return d;
}

SourceDistribution SourceDistribution::Finite(EmpiricalMeasure m) {
  SourceDistribution d;
  d.kind = Kind::kFinite;
  d.finite = std::move(m);
  d.Validate();
  return d;
}

SourceDistribution SourceDistribution::Parse(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.empty()) throw MfoError("empty distribution spec");
  if (parts[0] == "uniform" && parts.size() == 3)
    return Uniform(ParseDouble(parts[1], spec), ParseDouble(parts[2], spec));
  if (parts[0] == "exponential" && parts.size() == 2)
    return Exponential(ParseDouble(parts[1], spec));
  if (parts[0] == "file" && parts.size() >= 2) {
    const std::string path = spec.substr(5);
    std::ifstream in(path);
    if (!in) throw MfoError("cannot open '" + path + "'");
    return Finite(MeasureFromJson(nlohmann::json::parse(in)));
  }
  throw MfoError("unknown distribution spec '" + spec +
                 "' (expected uniform:a:b, exponential:rate or file:<path>)");
}

std::size_t SourceDistribution::dimension() const {
  if (kind == Kind::kFinite && finite.size() > 0) return static_cast<std::size_t>(finite[0].x.size());
  return 1;
}

void SourceDistribution::Validate() const {
  switch (kind) {
    case Kind::kUniform:
      if (!(b > a)) throw MfoError("uniform distribution needs b > a");
      break;
    case Kind::kExponential:
      if (!(rate > 0.0)) throw MfoError("exponential distribution needs rate > 0");
      break;
    case Kind::kFinite:
      if (finite.size() == 0) throw MfoError("finite distribution is empty");
      if (finite.space() != Space::kX) throw MfoError("finite distribution must be a measure on X");
      break;
  }
}

std::string SourceDistribution::ToString() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::kUniform:
      os << "uniform:" << a << ":" << b;
      break;
    case Kind::kExponential:
      os << "exponential:" << rate;
      break;
    case Kind::kFinite:
      os << "finite(" << finite.size() << " atoms)";
      break;
  }
  return os.str();
}

EmpiricalMeasure QuantizeSample(const SourceDistribution& dist, std::size_t n,
                                std::uint64_t seed) {
  dist.Validate();
  if (n < 1) throw MfoError("quantize: N must be >= 1");
  SeededEngine rng(seed);
  const double w = 1.0 / static_cast<double>(n);
  std::vector<Atom> atoms;
  atoms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(1);
    switch (dist.kind) {
      case SourceDistribution::Kind::kUniform:
        x[0] = rng.Uniform(dist.a, dist.b);
        break;
      case SourceDistribution::Kind::kExponential:
        x[0] = rng.Exponential(dist.rate);
        break;
      case SourceDistribution::Kind::kFinite: {
        const double u = rng.Uniform();
        double acc = 0.0;
        std::size_t pick = dist.finite.size() - 1;
        for (std::size_t k = 0; k < dist.finite.size(); ++k) {
          acc += dist.finite[k].w;
          if (u < acc) {
            pick = k;
            break;
          }
        }
        x = dist.finite[pick].x;
        break;
      }
    }
    atoms.push_back(Atom{x, Vector(), w});
  }
  return EmpiricalMeasure(Space::kX, std::move(atoms));
}

GridQuantization QuantizeGrid(const SourceDistribution& dist, std::size_t n) {
  dist.Validate();
  if (n < 1) throw MfoError("quantize: N must be >= 1");
  const double nn = static_cast<double>(n);
  GridQuantization out;
  std::vector<Atom> atoms;
  atoms.reserve(n);
  const double w = 1.0 / nn;
  switch (dist.kind) {
    case SourceDistribution::Kind::kUniform:
      for (std::size_t i = 0; i < n; ++i)
        atoms.push_back(Atom{Vector::Constant(1, dist.a + (dist.b - dist.a) * (i + 0.5) / nn), Vector(), w});
      out.support_max = dist.b;
      break;
    case SourceDistribution::Kind::kExponential: {
      const double keep = 1.0 - 1.0 / (4.0 * nn);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = keep * (i + 0.5) / nn;
        atoms.push_back(Atom{Vector::Constant(1, -std::log1p(-u) / dist.rate), Vector(), w});
      }
      out.truncated_mass = 1.0 - keep;
      out.support_max = -std::log1p(-keep) / dist.rate;
      break;
    }
    case SourceDistribution::Kind::kFinite:
      throw MfoError("quantize: grid quantization needs a one-dimensional continuous distribution");
  }
  out.measure = EmpiricalMeasure(Space::kX, std::move(atoms));
  return out;
}

namespace {

// int_p^q |F^{-1}(u) - a| du for the quantile function of dist.
double QuantileDeviation(const SourceDistribution& dist, double p, double q, double a) {
  if (q <= p) return 0.0;
  if (dist.kind == SourceDistribution::Kind::kUniform) {
    const double width = dist.b - dist.a;
    const double u_star = (a - dist.a) / width;
    auto prim = [&](double u) { return 0.5 * (u - u_star) * std::abs(u - u_star); };
    return width * (prim(q) - prim(p));
  }
  // F^{-1}(u) = -log(1 - u) / rate; P is an antiderivative.
  const double rate = dist.rate;
  auto prim = [&](double u) {
    const double v = 1.0 - u;
    return ((v > 0.0 ? v * std::log(v) : 0.0) + u) / rate;
  };
  const double u_star = std::clamp(-std::expm1(-rate * a), p, q);
  const double below = a * (u_star - p) - (prim(u_star) - prim(p));
  const double above = (prim(q) - prim(u_star)) - a * (q - u_star);
  return below + above;
}

}  // namespace

double D1ToContinuous(const SourceDistribution& dist, const EmpiricalMeasure& m) {
  dist.Validate();
  if (dist.kind == SourceDistribution::Kind::kFinite)
    throw MfoError("d1_to_continuous: needs a uniform or exponential distribution");
  std::vector<std::pair<double, double>> atoms;
  for (const Atom& a : m.atoms()) {
    if (a.x.size() != 1) throw MfoError("d1_to_continuous: measure must be one-dimensional");
    atoms.emplace_back(a.x[0], a.w);
  }
  std::sort(atoms.begin(), atoms.end());
  double total = 0.0;
  double cum = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double next = i + 1 == atoms.size() ? 1.0 : std::min(1.0, cum + atoms[i].second);
    total += QuantileDeviation(dist, cum, next, atoms[i].first);
    cum = next;
  }
  return total;
}

D1Estimate EstimateD1(const SourceDistribution& dist, const EmpiricalMeasure& m_n,
                      std::size_t sample_size, std::uint64_t seed) {
  if (sample_size < 10 * m_n.size())
    throw MfoError("estimate_d1: sample size must be at least 10 times the support size");
  double values[kResamples];
  double mean = 0.0;
  for (int r = 0; r < kResamples; ++r) {
    const EmpiricalMeasure sample = QuantizeSample(dist, sample_size, SplitMix64(seed + static_cast<std::uint64_t>(r)));
    values[r] = OtSolve(sample, m_n, Metric::Euclidean()).cost;
    mean += values[r] / kResamples;
  }
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean) / (kResamples - 1);
  D1Estimate e;
  e.estimate = mean;
  e.standard_error = std::sqrt(var / kResamples);
  e.sample_size = sample_size;
  e.resamples = kResamples;
  return e;
}

nlohmann::json ToJson(const D1Estimate& e) {
  return {{"estimate", e.estimate}, {"stderr", e.standard_error},
          {"sample_size", e.sample_size}, {"resamples", e.resamples}};
}

}  // namespace mfo
