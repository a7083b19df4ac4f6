// Copyright 2026 The Engagetag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ENGAGETAG_MAT_HPP_
#define ENGAGETAG_MAT_HPP_

#include <cassert>
#include <cstddef>
#include <vector>

namespace engagetag {

using Vec = std::vector<double>;

// Row-major dense matrix. Deliberately minimal; the arithmetic lives in
// engagetag::kernels.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double* row(std::size_t r) {
    assert(r < rows);
    return v.data() + r * cols;
  }
  const double* row(std::size_t r) const {
    assert(r < rows);
    return v.data() + r * cols;
  }

  double& at(std::size_t r, std::size_t c) {
    assert(r < rows && c < cols);
    return v[r * cols + c];
  }
  double at(std::size_t r, std::size_t c) const {
    assert(r < rows && c < cols);
    return v[r * cols + c];
  }

  std::size_t size() const { return v.size(); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }

  void fill(double value) { v.assign(v.size(), value); }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  friend bool operator==(const Mat& a, const Mat& b) {
    return a.rows == b.rows && a.cols == b.cols && a.v == b.v;
  }
};

inline Mat zeros_like(const Mat& m) { return Mat(m.rows, m.cols); }

}  // namespace engagetag

#endif  // ENGAGETAG_MAT_HPP_
