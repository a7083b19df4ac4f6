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

#ifndef ENGAGETAG_LABELGEN_HPP_
#define ENGAGETAG_LABELGEN_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "engagetag/corpus.hpp"
#include "engagetag/engagement.hpp"

// Projects track metadata onto utterance tokens with edit-distance fuzzy
// matching, minting fine-grained labeled examples from engagement signals.

namespace engagetag::labelgen {

struct ProjectionConfig {
  double threshold = 0.8;   // minimum fuzzy confidence for a span match
  int max_span_len = 10;    // longest candidate token span
};

// A matched token span for one metadata field.
struct SpanMatch {
  corpus::EntityType field = corpus::EntityType::Title;
  std::size_t begin = 0;  // half-open [begin, end)
  std::size_t end = 0;
  double confidence = 0.0;
};

// Lowercases ASCII letters, strips punctuation (apostrophes included),
// collapses whitespace runs to single spaces and trims. Bytes outside ASCII
// pass through untouched.
std::string normalize(const std::string& text);

// 1 - levenshtein(a, b) / max(|a|, |b|) over Unicode code points; 1.0 when
// both strings are empty. Inputs are expected to be normalized already.
double fuzzy_confidence(const std::string& a, const std::string& b);

// Code-point Levenshtein distance with unit costs.
std::size_t levenshtein(const std::string& a, const std::string& b);

// Best span of `tokens` matching `field_value`, or nullopt when no span
// reaches the confidence threshold. All contiguous spans up to
// cfg.max_span_len are scored; ties prefer the longer span, then the
// leftmost start.
std::optional<SpanMatch> match_field(const std::string& field_value,
                                     corpus::EntityType field,
                                     const std::vector<std::string>& tokens,
                                     const ProjectionConfig& cfg);

// Projects title/artist/album onto the tokens and renders accepted spans as
// BIO tags. Matches are accepted in descending confidence (ties: title,
// artist, album); overlapping later matches are dropped. Returns nullopt when
// the title found no non-overlapping match, in which case the candidate is
// discarded.
std::optional<corpus::LabeledExample> project_labels(
    const std::vector<std::string>& tokens,
    const engagement::TrackMetadata& metadata, const ProjectionConfig& cfg,
    const std::string& id = "");

}  // namespace engagetag::labelgen

#endif  // ENGAGETAG_LABELGEN_HPP_
