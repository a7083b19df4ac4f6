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

#ifndef ENGAGETAG_KERNELS_HPP_
#define ENGAGETAG_KERNELS_HPP_

#include <cstddef>

// Dense double-precision kernels used by the tagger's recurrent layers.
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant. The backend is picked once at startup
// from CPUID; tests pin it explicitly to compare the two paths.

namespace engagetag::kernels {

enum class Backend { Scalar, Avx2 };

// Backend currently routing all kernel calls.
Backend active_backend();

// Force a specific backend. Requesting Avx2 on a machine without AVX2/FMA
// support throws std::runtime_error.
void set_backend(Backend backend);

// True when the host CPU can run the AVX2 variants.
bool avx2_supported();

const char* backend_name(Backend backend);

// y = W x, with W row-major rows x cols.
void matvec(const double* w, const double* x, double* y, std::size_t rows,
            std::size_t cols);

// y += W x.
void matvec_acc(const double* w, const double* x, double* y, std::size_t rows,
                std::size_t cols);

// dx += W^T dy. W is the same row-major rows x cols matrix as in matvec.
void matvec_t_acc(const double* w, const double* dy, double* dx,
                  std::size_t rows, std::size_t cols);

// W += dy x^T (rank-1 accumulation into a rows x cols matrix).
void outer_acc(double* w, const double* dy, const double* x, std::size_t rows,
               std::size_t cols);

// y += a * x.
void axpy(double a, const double* x, double* y, std::size_t n);

// x *= a.
void scale(double a, double* x, std::size_t n);

double dot(const double* x, const double* y, std::size_t n);

double sumsq(const double* x, std::size_t n);

// z += x .* y (elementwise product accumulate).
void hadamard_acc(const double* x, const double* y, double* z, std::size_t n);

}  // namespace engagetag::kernels

#endif  // ENGAGETAG_KERNELS_HPP_
