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

#ifndef MFO_COMMON_HPP_
#define MFO_COMMON_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mfo {

template <typename Scalar>
using DynamicVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Vector = DynamicVector<double>;

// Tolerances shared across modules.
inline constexpr double kMergeTol = 1e-12;     // atom identity
inline constexpr double kWeightTol = 1e-12;    // total mass normalization
inline constexpr double kMarginalTol = 1e-9;   // coupling marginals

class MfoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weighted inner product <a, b>_w = sum_i w_i a_i b_i.
template <typename DerivedA, typename DerivedB, typename DerivedW>
typename DerivedA::Scalar WeightedDot(const Eigen::MatrixBase<DerivedA>& a,
                                      const Eigen::MatrixBase<DerivedB>& b,
                                      const Eigen::MatrixBase<DerivedW>& w) {
  return (a.array() * b.array() * w.array()).sum();
}

template <typename DerivedA, typename DerivedW>
typename DerivedA::Scalar WeightedNorm(const Eigen::MatrixBase<DerivedA>& a,
                                       const Eigen::MatrixBase<DerivedW>& w) {
  using std::sqrt;
  return sqrt(WeightedDot(a, a, w));
}

/// True when every component of a and b differs by at most tol.
template <typename DerivedA, typename DerivedB>
bool NearlyEqual(const Eigen::MatrixBase<DerivedA>& a,
                 const Eigen::MatrixBase<DerivedB>& b,
                 typename DerivedA::Scalar tol = kMergeTol) {
  if (a.size() != b.size()) return false;
  if (a.size() == 0) return true;
  return ((a - b).array().abs() <= tol).all();
}

template <typename Derived>
bool AllFinite(const Eigen::MatrixBase<Derived>& a) {
  return a.size() == 0 || a.allFinite();
}

}  // namespace mfo

#endif  // MFO_COMMON_HPP_
