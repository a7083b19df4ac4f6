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

#include "engagetag/kb.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>

#include <json.hpp>

#include "engagetag/labelgen.hpp"
#include "engagetag/util.hpp"

namespace engagetag::kb {

using nlohmann::json;

KnowledgeBase build_kb(std::vector<engagement::TrackMetadata> records) {
  KnowledgeBase kb;
  std::set<std::array<std::string, 3>> seen;
  for (auto& rec : records) {
    if (rec.title.empty() || rec.artist.empty()) {
      fail("KB record requires non-empty title and artist");
    }
    std::array<std::string, 3> key{labelgen::normalize(rec.title),
                                   labelgen::normalize(rec.artist),
                                   labelgen::normalize(rec.album)};
    if (!seen.insert(key).second) continue;
    std::size_t idx = kb.records.size();
    kb.by_title[key[0]].push_back(idx);
    kb.by_artist[key[1]].push_back(idx);
    if (!rec.album.empty()) kb.by_album[key[2]].push_back(idx);
    kb.records.push_back(std::move(rec));
  }
  return kb;
}

KnowledgeBase load_kb(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open KB file: ", path);
  std::vector<engagement::TrackMetadata> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t tab1 = line.find('\t');
    std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                 : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos ||
        line.find('\t', tab2 + 1) != std::string::npos) {
      fail(path, ":", lineno, ": expected 3 tab-separated fields");
    }
    engagement::TrackMetadata rec;
    rec.title = line.substr(0, tab1);
    rec.artist = line.substr(tab1 + 1, tab2 - tab1 - 1);
    rec.album = line.substr(tab2 + 1);
    if (rec.title.empty() || rec.artist.empty()) {
      fail(path, ":", lineno, ": title and artist must be non-empty");
    }
    records.push_back(std::move(rec));
  }
  return build_kb(std::move(records));
}

void save_kb(const KnowledgeBase& kb, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write KB file: ", path);
  for (const auto& rec : kb.records) {
    out << rec.title << '\t' << rec.artist << '\t' << rec.album << '\n';
  }
  if (!out) fail("write failed: ", path);
}

RelationalQuery query_from_entities(
    const std::vector<std::pair<corpus::EntityType, std::string>>& entities) {
  RelationalQuery q;
  for (const auto& [type, surface] : entities) {
    q.bindings.try_emplace(type, surface);
  }
  return q;
}

std::string_view status_name(Status s) {
  switch (s) {
    case Status::NotActivated: return "not_activated";
    case Status::Valid: return "valid";
    case Status::Invalid: return "invalid";
  }
  fail("unknown status");
}

Status validate(const KnowledgeBase& kb, const RelationalQuery& query) {
  if (query.bindings.size() < 2) return Status::NotActivated;
  auto field_of = [](const engagement::TrackMetadata& rec,
                     corpus::EntityType type) -> const std::string& {
    switch (type) {
      case corpus::EntityType::Title: return rec.title;
      case corpus::EntityType::Artist: return rec.artist;
      case corpus::EntityType::Album: return rec.album;
    }
    fail("unknown entity type");
  };
  // Candidates come from the first binding's index; all bindings are then
  // checked field-wise on each candidate.
  auto first = query.bindings.begin();
  const std::map<std::string, std::vector<std::size_t>>* index = nullptr;
  switch (first->first) {
    case corpus::EntityType::Title: index = &kb.by_title; break;
    case corpus::EntityType::Artist: index = &kb.by_artist; break;
    case corpus::EntityType::Album: index = &kb.by_album; break;
  }
  auto it = index->find(labelgen::normalize(first->second));
  if (it == index->end()) return Status::Invalid;
  for (std::size_t idx : it->second) {
    const auto& rec = kb.records[idx];
    bool all = true;
    for (const auto& [type, surface] : query.bindings) {
      if (labelgen::normalize(surface) !=
          labelgen::normalize(field_of(rec, type))) {
        all = false;
        break;
      }
    }
    if (all) return Status::Valid;
  }
  return Status::Invalid;
}

std::pair<decode::Hypothesis, RerankDiagnostics> rerank(
    const KnowledgeBase& kb, const std::vector<std::string>& tokens,
    const std::vector<decode::Hypothesis>& hypotheses) {
  if (hypotheses.empty()) fail("rerank requires at least one hypothesis");
  RerankDiagnostics diag;
  diag.statuses.reserve(hypotheses.size());
  std::size_t chosen = 0;
  bool found_valid = false;
  for (std::size_t rank = 0; rank < hypotheses.size(); ++rank) {
    std::vector<corpus::FineTag> fine;
    fine.reserve(hypotheses[rank].labels.size());
    for (int id : hypotheses[rank].labels) {
      fine.push_back(static_cast<corpus::FineTag>(id));
    }
    auto entities = decode::extract_entities(tokens, fine);
    if (entities.size() >= 2) diag.activated = true;
    Status status = validate(kb, query_from_entities(entities));
    diag.statuses.push_back(status);
    if (!found_valid && status == Status::Valid) {
      found_valid = true;
      chosen = rank;
    }
  }
  diag.chosen_rank = chosen;
  return {hypotheses[chosen], diag};
}

void save_diagnostics(const std::vector<DiagnosticsRecord>& records,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write diagnostics file: ", path);
  for (const auto& rec : records) {
    json statuses = json::array();
    for (Status s : rec.diag.statuses) statuses.push_back(std::string(status_name(s)));
    json j{{"id", rec.id},
           {"activated", rec.diag.activated},
           {"statuses", statuses},
           {"chosen_rank", rec.diag.chosen_rank}};
    out << j.dump() << "\n";
  }
  if (!out) fail("write failed: ", path);
}

std::vector<DiagnosticsRecord> load_diagnostics(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open diagnostics file: ", path);
  std::vector<DiagnosticsRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = cat(path, ":", lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(where, ": invalid JSON: ", e.what());
    }
    DiagnosticsRecord rec;
    if (!j.contains("id") || !j["id"].is_string()) {
      fail(where, ": missing string field \"id\"");
    }
    rec.id = j["id"].get<std::string>();
    if (!j.contains("activated") || !j["activated"].is_boolean()) {
      fail(where, ": missing boolean field \"activated\"");
    }
    rec.diag.activated = j["activated"].get<bool>();
    if (!j.contains("statuses") || !j["statuses"].is_array()) {
      fail(where, ": missing array field \"statuses\"");
    }
    for (const auto& s : j["statuses"]) {
      std::string name = s.get<std::string>();
      if (name == "not_activated") {
        rec.diag.statuses.push_back(Status::NotActivated);
      } else if (name == "valid") {
        rec.diag.statuses.push_back(Status::Valid);
      } else if (name == "invalid") {
        rec.diag.statuses.push_back(Status::Invalid);
      } else {
        fail(where, ": unknown status \"", name, "\"");
      }
    }
    if (!j.contains("chosen_rank") || !j["chosen_rank"].is_number_unsigned()) {
      fail(where, ": missing non-negative integer field \"chosen_rank\"");
    }
    rec.diag.chosen_rank = j["chosen_rank"].get<std::size_t>();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace engagetag::kb
