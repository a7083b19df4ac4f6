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

#include "kernels_impl.hpp"

namespace engagetag::kernels::detail {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void matvec_scalar(const double* w, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(w + r * cols, x, cols);
}

void matvec_acc_scalar(const double* w, const double* x, double* y,
                       std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_scalar(w + r * cols, x, cols);
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// dx += W^T dy, walked row-wise so W stays in stream order.
void matvec_t_acc_scalar(const double* w, const double* dy, double* dx,
                         std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(dy[r], w + r * cols, dx, cols);
}

void outer_acc_scalar(double* w, const double* dy, const double* x,
                      std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(dy[r], x, w + r * cols, cols);
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sumsq_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void hadamard_acc_scalar(const double* x, const double* y, double* z,
                         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] += x[i] * y[i];
}

}  // namespace

KernelTable scalar_table() {
  KernelTable t;
  t.matvec = matvec_scalar;
  t.matvec_acc = matvec_acc_scalar;
  t.matvec_t_acc = matvec_t_acc_scalar;
  t.outer_acc = outer_acc_scalar;
  t.axpy = axpy_scalar;
  t.scale = scale_scalar;
  t.dot = dot_scalar;
  t.sumsq = sumsq_scalar;
  t.hadamard_acc = hadamard_acc_scalar;
  return t;
}

}  // namespace engagetag::kernels::detail
