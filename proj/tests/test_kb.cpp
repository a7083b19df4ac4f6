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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <vector>

#include "engagetag/corpus.hpp"
#include "engagetag/decode.hpp"
#include "engagetag/kb.hpp"
#include "helpers.hpp"

namespace corpus = engagetag::corpus;
namespace decode = engagetag::decode;
namespace kb = engagetag::kb;
using corpus::EntityType;
using engagetag::engagement::TrackMetadata;

namespace {

kb::KnowledgeBase sample_kb() {
  return kb::build_kb({
      {"Something", "The Beatles", "Abbey Road"},
      {"Shake It Off", "Taylor Swift", "1989"},
      {"One", "Metallica", ""},
      {"One", "U2", "Achtung Baby"},
  });
}

decode::Hypothesis hyp(std::vector<int> labels, double score) {
  return decode::Hypothesis{std::move(labels), score};
}

}  // namespace

TEST_CASE("build_kb normalizes, deduplicates and indexes") {
  auto base = kb::build_kb({
      {"Something", "The Beatles", "Abbey Road"},
      {"something!", "THE BEATLES", "abbey road"},  // duplicate after normalize
      {"One", "Metallica", ""},
  });
  CHECK(base.records.size() == 2);
  REQUIRE(base.by_title.count("something") == 1);
  CHECK(base.by_title.at("something").size() == 1);
  CHECK(base.by_artist.count("the beatles") == 1);
  CHECK(base.by_album.count("abbey road") == 1);
  // Empty albums are not indexed.
  for (const auto& [album, idx] : base.by_album) CHECK_FALSE(album.empty());
}

TEST_CASE("build_kb indexes shared surfaces under every owner") {
  auto base = sample_kb();
  REQUIRE(base.by_title.count("one") == 1);
  CHECK(base.by_title.at("one").size() == 2);
  CHECK(base.by_artist.at("metallica").size() == 1);
}

TEST_CASE("build_kb rejects records without title or artist") {
  CHECK_THROWS(kb::build_kb({{"", "Artist", ""}}));
  CHECK_THROWS(kb::build_kb({{"Title", "", ""}}));
}

TEST_CASE("kb TSV round-trip preserves records") {
  testutil::TempDir dir;
  auto base = sample_kb();
  std::string path = dir.file("kb.tsv");
  kb::save_kb(base, path);
  auto loaded = kb::load_kb(path);
  REQUIRE(loaded.records.size() == base.records.size());
  for (std::size_t i = 0; i < base.records.size(); ++i)
    CHECK(loaded.records[i] == base.records[i]);
  CHECK(loaded.by_title.size() == base.by_title.size());
  CHECK(loaded.by_artist.size() == base.by_artist.size());
  CHECK(loaded.by_album.size() == base.by_album.size());
}

TEST_CASE("load_kb rejects malformed lines") {
  testutil::TempDir dir;
  std::string path = dir.file("bad.tsv");
  testutil::write_file(path, "only one field\n");
  CHECK_THROWS(kb::load_kb(path));
  CHECK_THROWS(kb::load_kb(dir.file("missing.tsv")));
}

TEST_CASE("query_from_entities binds the leftmost entity per type") {
  auto query = kb::query_from_entities({
      {EntityType::Title, "something"},
      {EntityType::Artist, "the beatles"},
      {EntityType::Title, "ignored second title"},
  });
  REQUIRE(query.bindings.count(EntityType::Title) == 1);
  CHECK(query.bindings.at(EntityType::Title) == "something");
  CHECK(query.bindings.at(EntityType::Artist) == "the beatles");
  CHECK(query.bindings.size() == 2);

  CHECK(kb::query_from_entities({}).bindings.empty());
}

TEST_CASE("validate requires two bindings and a jointly matching record") {
  auto base = sample_kb();

  kb::RelationalQuery valid;
  valid.bindings[EntityType::Title] = "something";
  valid.bindings[EntityType::Artist] = "the Beatles";
  CHECK(kb::validate(base, valid) == kb::Status::Valid);

  kb::RelationalQuery invalid = valid;
  invalid.bindings[EntityType::Artist] = "Taylor Swift";
  CHECK(kb::validate(base, invalid) == kb::Status::Invalid);

  kb::RelationalQuery single;
  single.bindings[EntityType::Artist] = "Metallica";
  CHECK(kb::validate(base, single) == kb::Status::NotActivated);
  CHECK(kb::validate(base, kb::RelationalQuery{}) == kb::Status::NotActivated);

  // The shared title "one" validates against either owning artist.
  kb::RelationalQuery one_metallica;
  one_metallica.bindings[EntityType::Title] = "One";
  one_metallica.bindings[EntityType::Artist] = "metallica";
  CHECK(kb::validate(base, one_metallica) == kb::Status::Valid);
  kb::RelationalQuery one_u2;
  one_u2.bindings[EntityType::Title] = "One";
  one_u2.bindings[EntityType::Artist] = "u2";
  CHECK(kb::validate(base, one_u2) == kb::Status::Valid);
  kb::RelationalQuery one_beatles;
  one_beatles.bindings[EntityType::Title] = "One";
  one_beatles.bindings[EntityType::Artist] = "the beatles";
  CHECK(kb::validate(base, one_beatles) == kb::Status::Invalid);

  // Three bindings must match a single record jointly.
  kb::RelationalQuery full;
  full.bindings[EntityType::Title] = "one";
  full.bindings[EntityType::Artist] = "u2";
  full.bindings[EntityType::Album] = "achtung baby";
  CHECK(kb::validate(base, full) == kb::Status::Valid);
  full.bindings[EntityType::Album] = "1989";
  CHECK(kb::validate(base, full) == kb::Status::Invalid);
}

TEST_CASE("status names are stable") {
  CHECK(kb::status_name(kb::Status::NotActivated) == "not_activated");
  CHECK(kb::status_name(kb::Status::Valid) == "valid");
  CHECK(kb::status_name(kb::Status::Invalid) == "invalid");
}

TEST_CASE("rerank keeps a valid top-1") {
  auto base = sample_kb();
  std::vector<std::string> tokens = {"play", "something", "by", "the",
                                     "beatles"};
  // [Default, B-Title, Default, B-Artist, I-Artist]
  std::vector<decode::Hypothesis> hyps = {
      hyp({0, 1, 0, 3, 4}, -0.1),
      hyp({0, 1, 0, 0, 0}, -0.4),
  };
  auto [chosen, diag] = kb::rerank(base, tokens, hyps);
  CHECK(chosen == hyps[0]);
  CHECK(diag.activated);
  CHECK(diag.chosen_rank == 0);
  REQUIRE(diag.statuses.size() == 2);
  CHECK(diag.statuses[0] == kb::Status::Valid);
  CHECK(diag.statuses[1] == kb::Status::NotActivated);
}

TEST_CASE("rerank promotes the best valid hypothesis") {
  auto base = sample_kb();
  std::vector<std::string> tokens = {"play", "one", "by", "metallica"};
  std::vector<decode::Hypothesis> hyps = {
      hyp({0, 1, 0, 0}, -0.05),  // title only -> NotActivated
      hyp({0, 3, 0, 1}, -0.10),  // types swapped -> Invalid
      hyp({0, 1, 0, 3}, -0.20),  // (one, metallica) -> Valid
      hyp({0, 1, 2, 3}, -0.30),  // title "one by" -> Invalid
  };
  auto [chosen, diag] = kb::rerank(base, tokens, hyps);
  CHECK(diag.activated);
  REQUIRE(diag.statuses.size() == 4);
  CHECK(diag.statuses[0] == kb::Status::NotActivated);
  CHECK(diag.statuses[1] == kb::Status::Invalid);
  CHECK(diag.statuses[2] == kb::Status::Valid);
  CHECK(diag.statuses[3] == kb::Status::Invalid);
  CHECK(diag.chosen_rank == 2);
  CHECK(chosen == hyps[2]);
}

TEST_CASE("rerank falls back to top-1 when nothing validates") {
  auto base = sample_kb();
  std::vector<std::string> tokens = {"play", "hello", "by", "adele"};
  std::vector<decode::Hypothesis> hyps = {
      hyp({0, 1, 0, 3}, -0.1),  // (hello, adele) not in the KB -> Invalid
      hyp({0, 1, 0, 0}, -0.2),  // NotActivated
  };
  auto [chosen, diag] = kb::rerank(base, tokens, hyps);
  CHECK(chosen == hyps[0]);
  CHECK(diag.chosen_rank == 0);
  CHECK(diag.activated);
  CHECK(diag.statuses[0] == kb::Status::Invalid);
}

TEST_CASE("rerank reports no activation when every hypothesis is sparse") {
  auto base = sample_kb();
  std::vector<std::string> tokens = {"play", "something"};
  std::vector<decode::Hypothesis> hyps = {
      hyp({0, 1}, -0.1),
      hyp({0, 0}, -0.2),
  };
  auto [chosen, diag] = kb::rerank(base, tokens, hyps);
  CHECK(chosen == hyps[0]);
  CHECK_FALSE(diag.activated);
  CHECK(diag.chosen_rank == 0);
  for (auto s : diag.statuses) CHECK(s == kb::Status::NotActivated);
}

TEST_CASE("rerank requires hypotheses") {
  auto base = sample_kb();
  CHECK_THROWS(kb::rerank(base, {"a"}, {}));
}

TEST_CASE("rerank never alters hypothesis labels") {
  auto base = sample_kb();
  std::vector<std::string> tokens = {"play", "one", "by", "metallica"};
  std::vector<decode::Hypothesis> hyps = {
      hyp({0, 1, 0, 3}, -0.1),
  };
  auto [chosen, diag] = kb::rerank(base, tokens, hyps);
  CHECK(chosen.labels == hyps[0].labels);
  CHECK(chosen.score == hyps[0].score);
}

TEST_CASE("diagnostics JSONL round-trip") {
  testutil::TempDir dir;
  std::vector<kb::DiagnosticsRecord> records;
  kb::DiagnosticsRecord r1;
  r1.id = "u1";
  r1.diag.activated = true;
  r1.diag.statuses = {kb::Status::Invalid, kb::Status::Valid,
                      kb::Status::NotActivated};
  r1.diag.chosen_rank = 1;
  kb::DiagnosticsRecord r2;
  r2.id = "u2";
  r2.diag.activated = false;
  r2.diag.statuses = {kb::Status::NotActivated};
  r2.diag.chosen_rank = 0;
  records.push_back(r1);
  records.push_back(r2);

  std::string path = dir.file("diag.jsonl");
  kb::save_diagnostics(records, path);
  auto loaded = kb::load_diagnostics(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "u1");
  CHECK(loaded[0].diag.activated);
  CHECK(loaded[0].diag.statuses == r1.diag.statuses);
  CHECK(loaded[0].diag.chosen_rank == 1);
  CHECK(loaded[1].id == "u2");
  CHECK_FALSE(loaded[1].diag.activated);
  CHECK(loaded[1].diag.chosen_rank == 0);
}
