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

#include "engagetag/corpus.hpp"

#include <fstream>

#include <json.hpp>

#include "engagetag/util.hpp"

namespace engagetag::corpus {

namespace {

using nlohmann::json;

constexpr std::string_view kCoarseNames[kCoarseTagCount] = {
    "Default", "B-musicEntity", "I-musicEntity"};

constexpr std::string_view kFineNames[kFineTagCount] = {
    "Default",       "B-musicTitle",  "I-musicTitle", "B-musicArtist",
    "I-musicArtist", "B-musicAlbum",  "I-musicAlbum"};

}  // namespace

int tag_count(Kind kind) {
  return kind == Kind::CG ? kCoarseTagCount : kFineTagCount;
}

std::string_view coarse_tag_name(CoarseTag tag) {
  return kCoarseNames[static_cast<int>(tag)];
}

std::string_view fine_tag_name(FineTag tag) {
  return kFineNames[static_cast<int>(tag)];
}

std::optional<CoarseTag> coarse_tag_from_name(std::string_view name) {
  for (int i = 0; i < kCoarseTagCount; ++i)
    if (kCoarseNames[i] == name) return static_cast<CoarseTag>(i);
  return std::nullopt;
}

std::optional<FineTag> fine_tag_from_name(std::string_view name) {
  for (int i = 0; i < kFineTagCount; ++i)
    if (kFineNames[i] == name) return static_cast<FineTag>(i);
  return std::nullopt;
}

std::string_view tag_name(Kind kind, int id) {
  return kind == Kind::CG ? kCoarseNames[id] : kFineNames[id];
}

std::string_view entity_type_name(EntityType type) {
  switch (type) {
    case EntityType::Title: return "musicTitle";
    case EntityType::Artist: return "musicArtist";
    case EntityType::Album: return "musicAlbum";
  }
  return "?";
}

bool is_begin(FineTag tag) {
  return tag == FineTag::BTitle || tag == FineTag::BArtist ||
         tag == FineTag::BAlbum;
}

bool is_inside(FineTag tag) {
  return tag == FineTag::ITitle || tag == FineTag::IArtist ||
         tag == FineTag::IAlbum;
}

std::optional<EntityType> entity_type_of(FineTag tag) {
  switch (tag) {
    case FineTag::BTitle:
    case FineTag::ITitle: return EntityType::Title;
    case FineTag::BArtist:
    case FineTag::IArtist: return EntityType::Artist;
    case FineTag::BAlbum:
    case FineTag::IAlbum: return EntityType::Album;
    default: return std::nullopt;
  }
}

FineTag begin_tag(EntityType type) {
  switch (type) {
    case EntityType::Title: return FineTag::BTitle;
    case EntityType::Artist: return FineTag::BArtist;
    case EntityType::Album: return FineTag::BAlbum;
  }
  return FineTag::Default;
}

FineTag inside_tag(EntityType type) {
  switch (type) {
    case EntityType::Title: return FineTag::ITitle;
    case EntityType::Artist: return FineTag::IArtist;
    case EntityType::Album: return FineTag::IAlbum;
  }
  return FineTag::Default;
}

std::string_view source_name(Source source) {
  return source == Source::HumanCoarse ? "human_coarse" : "engagement_fine";
}

std::optional<Source> source_from_name(std::string_view name) {
  if (name == "human_coarse") return Source::HumanCoarse;
  if (name == "engagement_fine") return Source::EngagementFine;
  return std::nullopt;
}

std::string check_bio(const std::vector<CoarseTag>& labels) {
  CoarseTag prev = CoarseTag::Default;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == CoarseTag::IEntity) {
      if (i == 0) return "I-musicEntity begins the sequence";
      if (prev == CoarseTag::Default)
        return cat("I-musicEntity follows Default at position ", i);
    }
    prev = labels[i];
  }
  return "";
}

std::string check_bio(const std::vector<FineTag>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_inside(labels[i])) continue;
    auto type = entity_type_of(labels[i]);
    if (i == 0) return cat(fine_tag_name(labels[i]), " begins the sequence");
    auto prev_type = entity_type_of(labels[i - 1]);
    if (!prev_type.has_value() || *prev_type != *type)
      return cat(fine_tag_name(labels[i]), " does not continue a ",
                 entity_type_name(*type), " span at position ", i);
  }
  return "";
}

void repair_bio(std::vector<int>& ids, Kind kind) {
  if (kind == Kind::CG) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != static_cast<int>(CoarseTag::IEntity)) continue;
      if (i == 0 || ids[i - 1] == static_cast<int>(CoarseTag::Default))
        ids[i] = static_cast<int>(CoarseTag::BEntity);
    }
    return;
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    FineTag tag = static_cast<FineTag>(ids[i]);
    if (!is_inside(tag)) continue;
    EntityType type = *entity_type_of(tag);
    bool continues = false;
    if (i > 0) {
      auto prev_type = entity_type_of(static_cast<FineTag>(ids[i - 1]));
      continues = prev_type.has_value() && *prev_type == type;
    }
    if (!continues) ids[i] = static_cast<int>(begin_tag(type));
  }
}

LabeledExample make_coarse_example(std::string id, std::vector<std::string> tokens,
                                   std::vector<CoarseTag> labels) {
  LabeledExample e;
  e.id = std::move(id);
  e.tokens = std::move(tokens);
  e.labels = std::move(labels);
  e.source = Source::HumanCoarse;
  return e;
}

LabeledExample make_fine_example(std::string id, std::vector<std::string> tokens,
                                 std::vector<FineTag> labels) {
  LabeledExample e;
  e.id = std::move(id);
  e.tokens = std::move(tokens);
  e.labels = std::move(labels);
  e.source = Source::EngagementFine;
  return e;
}

std::vector<int> label_ids(const LabeledExample& example) {
  std::vector<int> ids;
  ids.reserve(example.size());
  if (example.is_coarse()) {
    for (CoarseTag t : example.coarse()) ids.push_back(static_cast<int>(t));
  } else {
    for (FineTag t : example.fine()) ids.push_back(static_cast<int>(t));
  }
  return ids;
}

std::string validate_example(const LabeledExample& example) {
  if (example.tokens.empty()) return "tokens: empty";
  std::size_t n_labels = example.is_coarse() ? example.coarse().size()
                                             : example.fine().size();
  if (n_labels != example.tokens.size())
    return cat("labels: ", n_labels, " labels for ", example.tokens.size(),
               " tokens");
  if (example.source == Source::HumanCoarse && !example.is_coarse())
    return "source: human_coarse requires coarse labels";
  if (example.source == Source::EngagementFine && example.is_coarse())
    return "source: engagement_fine requires fine labels";
  std::string bio = example.is_coarse() ? check_bio(example.coarse())
                                        : check_bio(example.fine());
  if (!bio.empty()) return cat("labels: ", bio);
  return "";
}

void validate_dataset(const Dataset& dataset) {
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    const LabeledExample& e = dataset.examples[i];
    bool kind_ok = (dataset.kind == Kind::CG) == e.is_coarse();
    if (!kind_ok)
      fail("dataset: example ", i, " (id ", e.id, "): label space does not match dataset kind");
    std::string err = validate_example(e);
    if (!err.empty()) fail("dataset: example ", i, " (id ", e.id, "): ", err);
  }
}

namespace {

LabeledExample parse_record(const json& rec, Kind kind, std::size_t line_no) {
  auto field_error = [line_no](std::string_view field, std::string_view what) {
    fail("load_dataset: line ", line_no, ": field '", field, "': ", what);
  };

  if (!rec.is_object()) fail("load_dataset: line ", line_no, ": record is not an object");
  for (const char* key : {"id", "tokens", "labels", "source"})
    if (!rec.contains(key)) field_error(key, "missing");
  if (!rec["id"].is_string()) field_error("id", "not a string");
  if (!rec["tokens"].is_array()) field_error("tokens", "not an array");
  if (!rec["labels"].is_array()) field_error("labels", "not an array");
  if (!rec["source"].is_string()) field_error("source", "not a string");

  LabeledExample e;
  e.id = rec["id"].get<std::string>();
  for (const auto& t : rec["tokens"]) {
    if (!t.is_string()) field_error("tokens", "non-string token");
    e.tokens.push_back(t.get<std::string>());
  }

  auto source = source_from_name(rec["source"].get<std::string>());
  if (!source.has_value())
    field_error("source", cat("unknown value '", rec["source"].get<std::string>(), "'"));
  e.source = *source;

  if (kind == Kind::CG) {
    std::vector<CoarseTag> labels;
    for (const auto& l : rec["labels"]) {
      if (!l.is_string()) field_error("labels", "non-string label");
      auto tag = coarse_tag_from_name(l.get<std::string>());
      if (!tag.has_value())
        field_error("labels", cat("unknown coarse tag '", l.get<std::string>(), "'"));
      labels.push_back(*tag);
    }
    e.labels = std::move(labels);
  } else {
    std::vector<FineTag> labels;
    for (const auto& l : rec["labels"]) {
      if (!l.is_string()) field_error("labels", "non-string label");
      auto tag = fine_tag_from_name(l.get<std::string>());
      if (!tag.has_value())
        field_error("labels", cat("unknown fine tag '", l.get<std::string>(), "'"));
      labels.push_back(*tag);
    }
    e.labels = std::move(labels);
  }

  bool kind_ok = (kind == Kind::CG) == e.is_coarse();
  if (!kind_ok) field_error("source", "label space does not match dataset kind");
  std::string err = validate_example(e);
  if (!err.empty()) fail("load_dataset: line ", line_no, ": ", err);
  return e;
}

}  // namespace

Dataset load_dataset(const std::string& path, Kind kind) {
  std::ifstream in(path);
  if (!in) fail("load_dataset: cannot open ", path);

  Dataset ds;
  ds.kind = kind;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) fail("load_dataset: line ", line_no, ": empty line");
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      fail("load_dataset: line ", line_no, ": ", e.what());
    }
    ds.examples.push_back(parse_record(rec, kind, line_no));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  validate_dataset(dataset);
  std::ofstream out(path);
  if (!out) fail("save_dataset: cannot open ", path);
  for (const LabeledExample& e : dataset.examples) {
    json rec;
    rec["id"] = e.id;
    rec["tokens"] = e.tokens;
    json labels = json::array();
    if (e.is_coarse()) {
      for (CoarseTag t : e.coarse()) labels.push_back(std::string(coarse_tag_name(t)));
    } else {
      for (FineTag t : e.fine()) labels.push_back(std::string(fine_tag_name(t)));
    }
    rec["labels"] = std::move(labels);
    rec["source"] = std::string(source_name(e.source));
    out << rec.dump() << "\n";
  }
  if (!out) fail("save_dataset: write failed for ", path);
}

std::vector<CoarseTag> fine_to_coarse(const std::vector<FineTag>& labels) {
  std::string err = check_bio(labels);
  if (!err.empty()) fail("fine_to_coarse: invalid BIO input: ", err);

  std::vector<CoarseTag> out;
  out.reserve(labels.size());
  bool in_span = false;
  for (FineTag tag : labels) {
    if (tag == FineTag::Default) {
      out.push_back(CoarseTag::Default);
      in_span = false;
    } else {
      out.push_back(in_span ? CoarseTag::IEntity : CoarseTag::BEntity);
      in_span = true;
    }
  }
  return out;
}

}  // namespace engagetag::corpus
