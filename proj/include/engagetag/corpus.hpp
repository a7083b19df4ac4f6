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

#ifndef ENGAGETAG_CORPUS_HPP_
#define ENGAGETAG_CORPUS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Label spaces, labeled examples and dataset containers shared by the whole
// pipeline. Spans are BIO-encoded: B- opens an entity, I- continues it,
// Default marks non-entity tokens.

namespace engagetag::corpus {

enum class CoarseTag : std::uint8_t {
  Default = 0,
  BEntity = 1,
  IEntity = 2,
};

enum class FineTag : std::uint8_t {
  Default = 0,
  BTitle = 1,
  ITitle = 2,
  BArtist = 3,
  IArtist = 4,
  BAlbum = 5,
  IAlbum = 6,
};

enum class EntityType { Title, Artist, Album };

enum class Source { HumanCoarse, EngagementFine };

enum class Kind { CG, FG };

inline constexpr int kCoarseTagCount = 3;
inline constexpr int kFineTagCount = 7;

int tag_count(Kind kind);

std::string_view coarse_tag_name(CoarseTag tag);
std::string_view fine_tag_name(FineTag tag);
std::optional<CoarseTag> coarse_tag_from_name(std::string_view name);
std::optional<FineTag> fine_tag_from_name(std::string_view name);

// Tag name for a raw tag id in the given label space ("B-musicTitle", ...).
std::string_view tag_name(Kind kind, int id);

// "musicTitle", "musicArtist", "musicAlbum".
std::string_view entity_type_name(EntityType type);

bool is_begin(FineTag tag);
bool is_inside(FineTag tag);
std::optional<EntityType> entity_type_of(FineTag tag);
FineTag begin_tag(EntityType type);
FineTag inside_tag(EntityType type);

std::string_view source_name(Source source);
std::optional<Source> source_from_name(std::string_view name);

// Empty string when the sequence is valid BIO, else a description of the
// first violation.
std::string check_bio(const std::vector<CoarseTag>& labels);
std::string check_bio(const std::vector<FineTag>& labels);

// In-place repair over raw tag ids: an I- tag that does not continue a
// span of its own type becomes the corresponding B- tag.
void repair_bio(std::vector<int>& ids, Kind kind);

// Tokenized utterance plus one label sequence. The active alternative of
// `labels` is tied to `source`: HumanCoarse carries CoarseTag, EngagementFine
// carries FineTag.
struct LabeledExample {
  std::string id;
  std::vector<std::string> tokens;
  std::variant<std::vector<CoarseTag>, std::vector<FineTag>> labels;
  Source source = Source::HumanCoarse;

  bool is_coarse() const { return labels.index() == 0; }
  const std::vector<CoarseTag>& coarse() const {
    return std::get<std::vector<CoarseTag>>(labels);
  }
  const std::vector<FineTag>& fine() const {
    return std::get<std::vector<FineTag>>(labels);
  }
  std::size_t size() const { return tokens.size(); }

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

LabeledExample make_coarse_example(std::string id, std::vector<std::string> tokens,
                                   std::vector<CoarseTag> labels);
LabeledExample make_fine_example(std::string id, std::vector<std::string> tokens,
                                 std::vector<FineTag> labels);

// Raw tag ids of the example's label sequence.
std::vector<int> label_ids(const LabeledExample& example);

// Empty string when all invariants hold, else a description.
std::string validate_example(const LabeledExample& example);

struct Dataset {
  std::vector<LabeledExample> examples;
  Kind kind = Kind::CG;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Throws std::runtime_error naming the offending example when an invariant
// is violated.
void validate_dataset(const Dataset& dataset);

// JSONL, one record per line:
//   {"id": str, "tokens": [str], "labels": [str], "source": str}
// Errors name the line and field.
Dataset load_dataset(const std::string& path, Kind kind);
void save_dataset(const Dataset& dataset, const std::string& path);

// Collapse a fine BIO sequence into the coarse space: every maximal run of
// adjacent non-Default tags becomes a single musicEntity span. Throws on
// invalid BIO input.
std::vector<CoarseTag> fine_to_coarse(const std::vector<FineTag>& labels);

}  // namespace engagetag::corpus

#endif  // ENGAGETAG_CORPUS_HPP_
