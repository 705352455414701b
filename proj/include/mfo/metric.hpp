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

#ifndef MFO_METRIC_HPP_
#define MFO_METRIC_HPP_

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "mfo/common.hpp"

namespace mfo {

/// Ground metric d_X on parameter points.
class Metric {
 public:
  enum class Kind { kEuclidean, kGraphHop, kCustom };
  using Fn = std::function<double(const Vector&, const Vector&)>;

  static Metric Euclidean() {
    return Metric(Kind::kEuclidean, [](const Vector& a, const Vector& b) {
      return (a - b).norm();
    });
  }

  /// Points are tuples of node ids; the distance is the sum over coordinates
  /// of hop distances hops(a_i, b_i).
  static Metric GraphHop(Eigen::MatrixXd hops) {
    auto table = std::make_shared<const Eigen::MatrixXd>(std::move(hops));
    return Metric(Kind::kGraphHop, [table](const Vector& a, const Vector& b) {
      double d = 0.0;
      for (Eigen::Index i = 0; i < a.size(); ++i)
        d += (*table)(static_cast<Eigen::Index>(a[i]),
                      static_cast<Eigen::Index>(b[i]));
      return d;
    });
  }

  static Metric Custom(Fn fn) { return Metric(Kind::kCustom, std::move(fn)); }

  double operator()(const Vector& a, const Vector& b) const { return fn_(a, b); }
  Kind kind() const { return kind_; }

  /// True for the Euclidean metric on one-dimensional points.
  bool IsLine(Eigen::Index dim) const {
    return kind_ == Kind::kEuclidean && dim == 1;
  }

 private:
  Metric(Kind kind, Fn fn) : kind_(kind), fn_(std::move(fn)) {}

  Kind kind_;
  Fn fn_;
};

}  // namespace mfo

#endif  // MFO_METRIC_HPP_
