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

#ifndef ENGAGETAG_DECODE_HPP_
#define ENGAGETAG_DECODE_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "engagetag/corpus.hpp"
#include "engagetag/mat.hpp"

// Top-k label-sequence hypotheses from per-token head probabilities, plus
// typed entity extraction from fine label sequences.

namespace engagetag::decode {

// Per-token log probabilities for one head, T rows of L labels each.
struct Lattice {
  Mat log_probs;
};

// Builds a lattice by taking logs of a T x L probability matrix.
Lattice lattice_from_probs(const Mat& probs);

// Empty string when each row's logsumexp is 0 within 1e-6, else a message.
std::string check_lattice(const Lattice& lattice);

struct Hypothesis {
  std::vector<int> labels;  // tag ids, length T
  double score = 0.0;       // mean per-token log probability

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

// Exact top-k under the total order (sum of log probs descending, then
// lexicographic tag-id ascending); per-token scores are independent, so
// keeping the best `beam` prefixes at every step is lossless. Scores are
// computed before BIO repair; when `repair` names a label space the returned
// label sequences are repaired after ranking.
std::vector<Hypothesis> beam_search(
    const Lattice& lattice, int beam = 5,
    std::optional<corpus::Kind> repair = std::nullopt);

// One (type, surface) pair per maximal B/I run, ordered by span start; the
// surface is the space-joined raw tokens. Invalid BIO input is an error.
std::vector<std::pair<corpus::EntityType, std::string>> extract_entities(
    const std::vector<std::string>& tokens,
    const std::vector<corpus::FineTag>& labels);

}  // namespace engagetag::decode

#endif  // ENGAGETAG_DECODE_HPP_
