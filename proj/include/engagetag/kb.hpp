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

#ifndef ENGAGETAG_KB_HPP_
#define ENGAGETAG_KB_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "engagetag/corpus.hpp"
#include "engagetag/decode.hpp"
#include "engagetag/engagement.hpp"

// Music knowledge base: relational validation of entity hypotheses and
// promote-first-valid re-ranking of decoder output.

namespace engagetag::kb {

struct KnowledgeBase {
  std::vector<engagement::TrackMetadata> records;
  // Normalized field value -> record indexes. Empty fields are not indexed.
  std::map<std::string, std::vector<std::size_t>> by_title;
  std::map<std::string, std::vector<std::size_t>> by_artist;
  std::map<std::string, std::vector<std::size_t>> by_album;
};

// Deduplicates records (normalized field-wise) and builds the indexes.
// Records with an empty title or artist are an error.
KnowledgeBase build_kb(std::vector<engagement::TrackMetadata> records);

// TSV "title \t artist \t album" per line; album may be empty.
KnowledgeBase load_kb(const std::string& path);
void save_kb(const KnowledgeBase& kb, const std::string& path);

// At most one binding per entity type; when a hypothesis yields several
// entities of one type only the leftmost is bound.
struct RelationalQuery {
  std::map<corpus::EntityType, std::string> bindings;
};

RelationalQuery query_from_entities(
    const std::vector<std::pair<corpus::EntityType, std::string>>& entities);

enum class Status { NotActivated, Valid, Invalid };

std::string_view status_name(Status s);

// NotActivated when the query binds fewer than two types; Valid when one
// record matches every binding after normalization; Invalid otherwise.
Status validate(const KnowledgeBase& kb, const RelationalQuery& query);

struct RerankDiagnostics {
  bool activated = false;           // any hypothesis with >= 2 entities
  std::vector<Status> statuses;     // per input hypothesis
  std::size_t chosen_rank = 0;      // index into the input hypothesis list
};

// Returns the highest-scored hypothesis with status Valid, or the original
// top-1 when none validates. Never alters hypothesis labels.
std::pair<decode::Hypothesis, RerankDiagnostics> rerank(
    const KnowledgeBase& kb, const std::vector<std::string>& tokens,
    const std::vector<decode::Hypothesis>& hypotheses);

// Diagnostics JSONL: {"id": str, "activated": bool, "statuses": [str],
// "chosen_rank": int}. chosen_rank is a 0-based index.
struct DiagnosticsRecord {
  std::string id;
  RerankDiagnostics diag;
};

void save_diagnostics(const std::vector<DiagnosticsRecord>& records,
                      const std::string& path);
std::vector<DiagnosticsRecord> load_diagnostics(const std::string& path);

}  // namespace engagetag::kb

#endif  // ENGAGETAG_KB_HPP_
