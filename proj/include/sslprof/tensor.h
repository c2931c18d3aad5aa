// Copyright (c) 2026 The sslprof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSLPROF_TENSOR_H_
#define SSLPROF_TENSOR_H_

#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/StdVector>

namespace sslprof {

// Row-major dense matrix used for activations and parameter views.
template <typename Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <typename Real>
using RowVector = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

// Owning n-d array with contiguous row-major storage. The buffer uses
// Eigen's alignment so vectorized kernels on it take the same path for
// every allocation, which keeps reductions bitwise reproducible.
template <typename Real>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<Real, Eigen::aligned_allocator<Real>> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, Real fill = Real(0))
      : shape(std::move(dims)),
        data(std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                             std::multiplies<>()),
             fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  Real& operator[](std::size_t i) { return data[i]; }
  const Real& operator[](std::size_t i) const { return data[i]; }

  // View as a matrix: first dimension by the product of the rest.
  Eigen::Map<Matrix<Real>> AsMatrix() {
    return {data.data(), static_cast<Eigen::Index>(Rows()),
            static_cast<Eigen::Index>(Cols())};
  }
  Eigen::Map<const Matrix<Real>> AsMatrix() const {
    return {data.data(), static_cast<Eigen::Index>(Rows()),
            static_cast<Eigen::Index>(Cols())};
  }
  Eigen::Map<Vector<Real>> AsVector() {
    return {data.data(), static_cast<Eigen::Index>(data.size())};
  }
  Eigen::Map<const Vector<Real>> AsVector() const {
    return {data.data(), static_cast<Eigen::Index>(data.size())};
  }

  std::size_t Rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t Cols() const { return shape.empty() ? 1 : data.size() / shape[0]; }
};

inline std::string ShapeString(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

}  // namespace sslprof

#endif  // SSLPROF_TENSOR_H_
