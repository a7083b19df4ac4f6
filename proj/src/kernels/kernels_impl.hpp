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

#ifndef ENGAGETAG_KERNELS_IMPL_HPP_
#define ENGAGETAG_KERNELS_IMPL_HPP_

#include <cstddef>

namespace engagetag::kernels::detail {

struct KernelTable {
  void (*matvec)(const double*, const double*, double*, std::size_t,
                 std::size_t);
  void (*matvec_acc)(const double*, const double*, double*, std::size_t,
                     std::size_t);
  void (*matvec_t_acc)(const double*, const double*, double*, std::size_t,
                       std::size_t);
  void (*outer_acc)(double*, const double*, const double*, std::size_t,
                    std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  void (*hadamard_acc)(const double*, const double*, double*, std::size_t);
};

KernelTable scalar_table();

// Defined only when the build targets x86-64; returns false otherwise.
bool avx2_table(KernelTable* out);

}  // namespace engagetag::kernels::detail

#endif  // ENGAGETAG_KERNELS_IMPL_HPP_
