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

// Elements of the aggregate Hilbert space H, discretized as R^n with a
// diagonal inner product <a, b> = sum_i w_i a_i b_i. The weight vector is
// shared between all aggregates of one problem.

#ifndef MFO_AGGREGATE_HPP_
#define MFO_AGGREGATE_HPP_

#include <memory>
#include <utility>

#include "mfo/common.hpp"

namespace mfo {

template <typename Scalar>
class AggregateVector {
 public:
  using VectorType = DynamicVector<Scalar>;
  using WeightsPtr = std::shared_ptr<const VectorType>;

  AggregateVector() = default;
  AggregateVector(VectorType values, WeightsPtr weights)
      : values_(std::move(values)), weights_(std::move(weights)) {
    if (!weights_ || weights_->size() != values_.size())
      throw MfoError("aggregate values and weights differ in dimension");
  }

  /// Zero element of the space described by weights.
  static AggregateVector Zero(WeightsPtr weights) {
    VectorType zero = VectorType::Zero(weights->size());
    return AggregateVector(std::move(zero), std::move(weights));
  }

  const VectorType& values() const { return values_; }
  VectorType& values() { return values_; }
  const VectorType& weights() const { return *weights_; }
  const WeightsPtr& weights_ptr() const { return weights_; }
  Eigen::Index size() const { return values_.size(); }
  Scalar operator[](Eigen::Index i) const { return values_[i]; }
  Scalar& operator[](Eigen::Index i) { return values_[i]; }

  AggregateVector& operator+=(const AggregateVector& other) {
    values_ += other.values_;
    return *this;
  }
  AggregateVector& operator-=(const AggregateVector& other) {
    values_ -= other.values_;
    return *this;
  }
  AggregateVector& operator*=(Scalar s) {
    values_ *= s;
    return *this;
  }

 private:
  VectorType values_;
  WeightsPtr weights_;
};

template <typename Scalar>
Scalar Inner(const AggregateVector<Scalar>& a, const AggregateVector<Scalar>& b) {
  return WeightedDot(a.values(), b.values(), a.weights());
}

template <typename Scalar>
Scalar Norm(const AggregateVector<Scalar>& a) {
  return WeightedNorm(a.values(), a.weights());
}

template <typename Scalar>
AggregateVector<Scalar> operator+(AggregateVector<Scalar> a,
                                  const AggregateVector<Scalar>& b) {
  return a += b;
}

template <typename Scalar>
AggregateVector<Scalar> operator-(AggregateVector<Scalar> a,
                                  const AggregateVector<Scalar>& b) {
  return a -= b;
}

template <typename Scalar>
AggregateVector<Scalar> operator*(Scalar s, AggregateVector<Scalar> a) {
  return a *= s;
}

/// (1 - t) a + t b
template <typename Scalar>
AggregateVector<Scalar> Lerp(const AggregateVector<Scalar>& a,
                             const AggregateVector<Scalar>& b, Scalar t) {
  return AggregateVector<Scalar>((1 - t) * a.values() + t * b.values(),
                                 a.weights_ptr());
}

using Aggregate = AggregateVector<double>;

}  // namespace mfo

#endif  // MFO_AGGREGATE_HPP_
