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

#include "engagetag/decode.hpp"

#include <algorithm>
#include <cmath>

#include "engagetag/util.hpp"

namespace engagetag::decode {

Lattice lattice_from_probs(const Mat& probs) {
  Lattice lat;
  lat.log_probs = probs;
  for (double& x : lat.log_probs.v) x = std::log(x);
  return lat;
}

std::string check_lattice(const Lattice& lattice) {
  const Mat& lp = lattice.log_probs;
  if (lp.rows == 0 || lp.cols == 0) return "lattice is empty";
  for (std::size_t t = 0; t < lp.rows; ++t) {
    double mx = lp.at(t, 0);
    for (std::size_t l = 1; l < lp.cols; ++l) mx = std::max(mx, lp.at(t, l));
    if (!std::isfinite(mx)) return cat("row ", t, " has no finite entry");
    double s = 0.0;
    for (std::size_t l = 0; l < lp.cols; ++l) s += std::exp(lp.at(t, l) - mx);
    double lse = mx + std::log(s);
    if (std::abs(lse) > 1e-6) {
      return cat("row ", t, " logsumexp is ", lse, ", expected 0");
    }
  }
  return {};
}

namespace {

struct Prefix {
  double sum = 0.0;
  std::vector<int> labels;
};

// Sum descending, then lexicographic tag ids ascending. Total order over
// distinct label sequences.
bool prefix_less(const Prefix& a, const Prefix& b) {
  if (a.sum != b.sum) return a.sum > b.sum;
  return a.labels < b.labels;
}

}  // namespace

std::vector<Hypothesis> beam_search(const Lattice& lattice, int beam,
                                    std::optional<corpus::Kind> repair) {
  if (beam < 1) fail("beam must be >= 1, got ", beam);
  if (auto err = check_lattice(lattice); !err.empty()) {
    fail("invalid lattice: ", err);
  }
  const Mat& lp = lattice.log_probs;
  const std::size_t T = lp.rows;
  const std::size_t L = lp.cols;
  if (repair && static_cast<int>(L) != corpus::tag_count(*repair)) {
    fail("lattice width ", L, " does not match repair label space");
  }

  std::vector<Prefix> frontier{Prefix{}};
  std::vector<Prefix> expanded;
  for (std::size_t t = 0; t < T; ++t) {
    expanded.clear();
    expanded.reserve(frontier.size() * L);
    for (const auto& p : frontier) {
      for (std::size_t l = 0; l < L; ++l) {
        Prefix q;
        q.sum = p.sum + lp.at(t, l);
        q.labels = p.labels;
        q.labels.push_back(static_cast<int>(l));
        expanded.push_back(std::move(q));
      }
    }
    std::sort(expanded.begin(), expanded.end(), prefix_less);
    if (expanded.size() > static_cast<std::size_t>(beam)) {
      expanded.resize(static_cast<std::size_t>(beam));
    }
    frontier = std::move(expanded);
    expanded = {};
  }

  std::vector<Hypothesis> out;
  out.reserve(frontier.size());
  for (auto& p : frontier) {
    Hypothesis h;
    h.score = p.sum / static_cast<double>(T);
    h.labels = std::move(p.labels);
    if (repair) corpus::repair_bio(h.labels, *repair);
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<std::pair<corpus::EntityType, std::string>> extract_entities(
    const std::vector<std::string>& tokens,
    const std::vector<corpus::FineTag>& labels) {
  if (tokens.size() != labels.size()) {
    fail("extract_entities: ", tokens.size(), " tokens vs ", labels.size(),
         " labels");
  }
  if (auto err = corpus::check_bio(labels); !err.empty()) {
    fail("extract_entities: invalid BIO: ", err);
  }
  std::vector<std::pair<corpus::EntityType, std::string>> out;
  std::size_t i = 0;
  while (i < labels.size()) {
    if (!corpus::is_begin(labels[i])) {
      ++i;
      continue;
    }
    corpus::EntityType type = *corpus::entity_type_of(labels[i]);
    std::string surface = tokens[i];
    std::size_t j = i + 1;
    while (j < labels.size() && corpus::is_inside(labels[j]) &&
           *corpus::entity_type_of(labels[j]) == type) {
      surface += ' ';
      surface += tokens[j];
      ++j;
    }
    out.emplace_back(type, std::move(surface));
    i = j;
  }
  return out;
}

}  // namespace engagetag::decode
