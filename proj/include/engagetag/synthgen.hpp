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

#ifndef ENGAGETAG_SYNTHGEN_HPP_
#define ENGAGETAG_SYNTHGEN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "engagetag/corpus.hpp"
#include "engagetag/engagement.hpp"
#include "engagetag/kb.hpp"

// Synthetic KB, gold-labeled corpora, ASR-style noise, and engagement event
// logs, so the whole pipeline runs end to end without production data.

namespace engagetag::synthgen {

std::vector<std::string> default_templates();

struct GeneratorConfig {
  int n_artists = 40;
  int songs_per_artist = 3;
  // Patterns with {title}/{artist}/{album} slots. Every default pattern
  // carries {title}: projection discards candidates without a title match,
  // so title-free patterns would break pipeline closure.
  std::vector<std::string> templates = default_templates();
  double typo_char_rate = 0.0;
  double token_drop_rate = 0.0;
  double token_dup_rate = 0.0;
  double correct_play_rate = 0.85;
  // Fraction of titles (and, capped at one use each, artist names) drawn
  // from a small common-word list. Common surfaces double as template
  // fillers, which is what makes them genuinely ambiguous.
  double ambiguous_title_fraction = 0.0;
  std::uint64_t seed = 1;
};

std::string validate_config(const GeneratorConfig& config);

// Pseudo-word KB. Generated words are globally unique, at least edit
// distance 2 apart, and never within fuzzy confidence 0.8 of a template
// filler word, so zero-noise projection is exact.
kb::KnowledgeBase gen_kb(const GeneratorConfig& config);

struct CorpusBundle {
  corpus::Dataset fine;                 // gold fine labels, source engagement
  corpus::Dataset coarse;               // fine_to_coarse view, source human
  std::vector<std::size_t> record_idx;  // KB record per utterance
};

// n template instantiations over uniform KB records. Gold labels are
// assigned by construction; noise runs after labeling (typos keep labels,
// drops remove them with BIO repair, duplicates extend runs).
CorpusBundle gen_corpus(const kb::KnowledgeBase& kb,
                        const GeneratorConfig& config, std::size_t n);

// One session per utterance: the assistant plays the true record and the
// playback crosses the threshold with probability correct_play_rate;
// otherwise it plays a distractor, the user aborts early and manually plays
// the true record past the threshold. Session ids equal example ids.
std::vector<engagement::EngagementEvent> gen_engagement_logs(
    const CorpusBundle& bundle, const kb::KnowledgeBase& kb,
    const GeneratorConfig& config);

}  // namespace engagetag::synthgen

#endif  // ENGAGETAG_SYNTHGEN_HPP_
