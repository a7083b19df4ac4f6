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

#include "engagetag/kernels.hpp"

#include <stdexcept>

#include "kernels_impl.hpp"

namespace engagetag::kernels {

namespace {

bool cpu_has_avx2_fma() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Dispatch {
  detail::KernelTable table;
  Backend backend;
  bool avx2_ok;

  Dispatch() {
    avx2_ok = false;
    detail::KernelTable avx2;
    if (cpu_has_avx2_fma() && detail::avx2_table(&avx2)) {
      table = avx2;
      backend = Backend::Avx2;
      avx2_ok = true;
    } else {
      table = detail::scalar_table();
      backend = Backend::Scalar;
    }
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

bool avx2_supported() { return dispatch().avx2_ok; }

void set_backend(Backend backend) {
  Dispatch& d = dispatch();
  if (backend == Backend::Avx2) {
    detail::KernelTable avx2;
    if (!d.avx2_ok || !detail::avx2_table(&avx2))
      throw std::runtime_error("kernels: AVX2 backend not supported on this CPU");
    d.table = avx2;
  } else {
    d.table = detail::scalar_table();
  }
  d.backend = backend;
}

const char* backend_name(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

void matvec(const double* w, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
  dispatch().table.matvec(w, x, y, rows, cols);
}

void matvec_acc(const double* w, const double* x, double* y, std::size_t rows,
                std::size_t cols) {
  dispatch().table.matvec_acc(w, x, y, rows, cols);
}

void matvec_t_acc(const double* w, const double* dy, double* dx,
                  std::size_t rows, std::size_t cols) {
  dispatch().table.matvec_t_acc(w, dy, dx, rows, cols);
}

void outer_acc(double* w, const double* dy, const double* x, std::size_t rows,
               std::size_t cols) {
  dispatch().table.outer_acc(w, dy, x, rows, cols);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  dispatch().table.axpy(a, x, y, n);
}

void scale(double a, double* x, std::size_t n) {
  dispatch().table.scale(a, x, n);
}

double dot(const double* x, const double* y, std::size_t n) {
  return dispatch().table.dot(x, y, n);
}

double sumsq(const double* x, std::size_t n) {
  return dispatch().table.sumsq(x, n);
}

void hadamard_acc(const double* x, const double* y, double* z, std::size_t n) {
  dispatch().table.hadamard_acc(x, y, z, n);
}

}  // namespace engagetag::kernels
