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

#include <algorithm>
#include <string>
#include <vector>

#include "engagetag/corpus.hpp"
#include "engagetag/labelgen.hpp"
#include "engagetag/rng.hpp"

namespace corpus = engagetag::corpus;
namespace engagement = engagetag::engagement;
namespace labelgen = engagetag::labelgen;
using corpus::EntityType;
using corpus::FineTag;
using engagetag::Rng;
using labelgen::ProjectionConfig;

namespace {

// Reference Levenshtein: decode UTF-8 by skipping continuation bytes, then
// run the full dynamic-programming matrix. Written independently of the
// two-row implementation under test.
std::vector<std::string> decode_points(const std::string& s) {
  std::vector<std::string> points;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len = 1;
    unsigned char c = static_cast<unsigned char>(s[i]);
    if ((c & 0x80u) != 0) {
      while (i + len < s.size() &&
             (static_cast<unsigned char>(s[i + len]) & 0xC0u) == 0x80u)
        ++len;
    }
    points.push_back(s.substr(i, len));
    i += len;
  }
  return points;
}

std::size_t reference_levenshtein(const std::string& a, const std::string& b) {
  auto pa = decode_points(a);
  auto pb = decode_points(b);
  std::vector<std::vector<std::size_t>> d(pa.size() + 1,
                                          std::vector<std::size_t>(pb.size() + 1));
  for (std::size_t i = 0; i <= pa.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= pb.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= pa.size(); ++i) {
    for (std::size_t j = 1; j <= pb.size(); ++j) {
      std::size_t sub = d[i - 1][j - 1] + (pa[i - 1] == pb[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[pa.size()][pb.size()];
}

std::string join_span(const std::vector<std::string>& tokens, std::size_t begin,
                      std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Exhaustive oracle for match_field: scores every span, applies the same
// acceptance and tie rules by construction.
std::optional<labelgen::SpanMatch> oracle_match(
    const std::string& field_value, EntityType field,
    const std::vector<std::string>& tokens, const ProjectionConfig& cfg) {
  std::string target = labelgen::normalize(field_value);
  std::optional<labelgen::SpanMatch> best;
  for (std::size_t begin = 0; begin < tokens.size(); ++begin) {
    std::size_t max_end =
        std::min(tokens.size(), begin + static_cast<std::size_t>(cfg.max_span_len));
    for (std::size_t end = begin + 1; end <= max_end; ++end) {
      std::string span = labelgen::normalize(join_span(tokens, begin, end));
      double conf = labelgen::fuzzy_confidence(span, target);
      if (conf < cfg.threshold) continue;
      bool better = false;
      if (!best) {
        better = true;
      } else if (conf > best->confidence) {
        better = true;
      } else if (conf == best->confidence) {
        std::size_t best_len = best->end - best->begin;
        std::size_t len = end - begin;
        if (len > best_len) better = true;
        else if (len == best_len && begin < best->begin) better = true;
      }
      if (better) best = labelgen::SpanMatch{field, begin, end, conf};
    }
  }
  return best;
}

std::string random_word(Rng& rng, const std::vector<std::string>& pool) {
  return pool[rng.uniform_index(pool.size())];
}

}  // namespace

TEST_CASE("normalize lowercases, strips punctuation and collapses spaces") {
  CHECK(labelgen::normalize("Play That Song!") == "play that song");
  CHECK(labelgen::normalize("You're Beautiful") == "youre beautiful");
  CHECK(labelgen::normalize("  a\t b ") == "a b");
  CHECK(labelgen::normalize("(Don't) STOP...") == "dont stop");
  CHECK(labelgen::normalize("") == "");
  CHECK(labelgen::normalize("!!!") == "");
}

TEST_CASE("normalize is idempotent on random strings") {
  Rng rng(11);
  const std::string alphabet =
      "abcXYZ 019'.,!?-\t\xC3\xA9\xE3\x81\x82";  // includes UTF-8 bytes
  for (int it = 0; it < 500; ++it) {
    std::size_t len = rng.uniform_index(30);
    std::string s;
    for (std::size_t i = 0; i < len; ++i)
      s.push_back(alphabet[rng.uniform_index(alphabet.size())]);
    std::string once = labelgen::normalize(s);
    CHECK(labelgen::normalize(once) == once);
  }
}

TEST_CASE("levenshtein matches a full-matrix reference on random pairs") {
  Rng rng(12);
  const std::vector<std::string> atoms = {"a", "b", "c",
                                          "\xC3\xA9",      // e acute
                                          "\xE3\x81\x82",  // hiragana a
                                          " "};
  for (int it = 0; it < 1500; ++it) {
    std::string a, b;
    std::size_t la = rng.uniform_index(41);
    std::size_t lb = rng.uniform_index(41);
    for (std::size_t i = 0; i < la; ++i) a += atoms[rng.uniform_index(atoms.size())];
    for (std::size_t i = 0; i < lb; ++i) b += atoms[rng.uniform_index(atoms.size())];
    CHECK(labelgen::levenshtein(a, b) == reference_levenshtein(a, b));
  }
}

TEST_CASE("levenshtein counts code points, not bytes") {
  CHECK(labelgen::levenshtein("\xC3\xA9", "e") == 1);
  CHECK(labelgen::levenshtein("\xE3\x81\x82\xE3\x81\x84", "") == 2);
  CHECK(labelgen::levenshtein("abc", "abc") == 0);
  CHECK(labelgen::levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("fuzzy_confidence on reference pairs") {
  CHECK(labelgen::fuzzy_confidence("", "") == 1.0);
  CHECK(labelgen::fuzzy_confidence("abc", "abc") == 1.0);
  CHECK(labelgen::fuzzy_confidence("your beautiful", "youre beautiful") ==
        doctest::Approx(1.0 - 1.0 / 15.0).epsilon(1e-12));
  CHECK(labelgen::fuzzy_confidence("this is you came for",
                                   "this is what you came for") ==
        doctest::Approx(0.8).epsilon(1e-12));
  // Both reference pairs clear the default acceptance threshold.
  CHECK(labelgen::fuzzy_confidence("your beautiful", "youre beautiful") >= 0.8);
  CHECK(labelgen::fuzzy_confidence("this is you came for",
                                   "this is what you came for") >= 0.8);
}

TEST_CASE("fuzzy_confidence is symmetric and maximal exactly on equality") {
  Rng rng(13);
  const std::vector<std::string> atoms = {"a", "b", "c", "d", " "};
  for (int it = 0; it < 500; ++it) {
    std::string a, b;
    std::size_t la = rng.uniform_index(15), lb = rng.uniform_index(15);
    for (std::size_t i = 0; i < la; ++i) a += atoms[rng.uniform_index(atoms.size())];
    for (std::size_t i = 0; i < lb; ++i) b += atoms[rng.uniform_index(atoms.size())];
    double ab = labelgen::fuzzy_confidence(a, b);
    CHECK(ab == labelgen::fuzzy_confidence(b, a));
    CHECK(ab <= 1.0);
    CHECK(ab >= 0.0);
    if (a == b) CHECK(ab == 1.0);
    if (ab == 1.0) CHECK(a == b);
  }
}

TEST_CASE("match_field reference spans") {
  ProjectionConfig cfg;
  std::vector<std::string> tokens = {"play", "play", "that", "song", "train"};

  auto m = labelgen::match_field("Play that song", EntityType::Title, tokens, cfg);
  REQUIRE(m.has_value());
  CHECK(m->begin == 1);
  CHECK(m->end == 4);
  CHECK(m->confidence == 1.0);
  CHECK(m->field == EntityType::Title);

  auto artist = labelgen::match_field("Train", EntityType::Artist, tokens, cfg);
  REQUIRE(artist.has_value());
  CHECK(artist->begin == 4);
  CHECK(artist->end == 5);
  CHECK(artist->confidence == 1.0);

  CHECK_FALSE(labelgen::match_field("Zzyzx", EntityType::Title,
                                    {"play", "hello"}, cfg)
                  .has_value());
  CHECK_FALSE(labelgen::match_field("anything", EntityType::Title, {}, cfg)
                  .has_value());
}

TEST_CASE("match_field agrees with an exhaustive oracle") {
  Rng rng(14);
  const std::vector<std::string> pool = {"play",  "that",  "song",   "train",
                                         "the",   "one",   "hello",  "beatles",
                                         "shake", "it",    "off",    "yesterday",
                                         "night", "stars", "smooth", "criminal"};
  ProjectionConfig cfg;
  int matched = 0;
  for (int it = 0; it < 800; ++it) {
    std::size_t n = 1 + rng.uniform_index(8);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(random_word(rng, pool));
    // Field value: either a random span of the tokens (possibly typo'd by
    // dropping a character) or random words.
    std::string field;
    if (rng.bernoulli(0.6)) {
      std::size_t b = rng.uniform_index(n);
      std::size_t e = b + 1 + rng.uniform_index(std::min<std::size_t>(3, n - b));
      field = join_span(tokens, b, e);
      if (!field.empty() && rng.bernoulli(0.5))
        field.erase(rng.uniform_index(field.size()), 1);
    } else {
      std::size_t w = 1 + rng.uniform_index(3);
      for (std::size_t i = 0; i < w; ++i) {
        if (i > 0) field += ' ';
        field += random_word(rng, pool);
      }
    }
    cfg.max_span_len = 1 + static_cast<int>(rng.uniform_index(10));
    auto got = labelgen::match_field(field, EntityType::Title, tokens, cfg);
    auto want = oracle_match(field, EntityType::Title, tokens, cfg);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      ++matched;
      CHECK(got->begin == want->begin);
      CHECK(got->end == want->end);
      CHECK(got->confidence == want->confidence);
    }
  }
  // The generator should exercise both branches heavily.
  CHECK(matched > 200);
  CHECK(matched < 800);
}

TEST_CASE("match_field acceptance is monotone in the threshold") {
  Rng rng(15);
  const std::vector<std::string> pool = {"play", "the", "song", "one", "train"};
  for (int it = 0; it < 300; ++it) {
    std::size_t n = 1 + rng.uniform_index(6);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(random_word(rng, pool));
    std::string field = random_word(rng, pool) + " " + random_word(rng, pool);
    ProjectionConfig lo, hi;
    lo.threshold = 0.5 + 0.3 * rng.uniform();
    hi.threshold = lo.threshold + (1.0 - lo.threshold) * rng.uniform();
    auto got_hi = labelgen::match_field(field, EntityType::Title, tokens, hi);
    auto got_lo = labelgen::match_field(field, EntityType::Title, tokens, lo);
    if (got_hi.has_value()) {
      // The best span does not depend on the threshold, only acceptance does.
      REQUIRE(got_lo.has_value());
      CHECK(got_lo->begin == got_hi->begin);
      CHECK(got_lo->end == got_hi->end);
      CHECK(got_lo->confidence == got_hi->confidence);
    }
    if (!got_lo.has_value()) CHECK_FALSE(got_hi.has_value());
  }
}

TEST_CASE("project_labels renders accepted spans as BIO tags") {
  ProjectionConfig cfg;
  engagement::TrackMetadata track;
  track.title = "This Is What You Came For";
  track.artist = "Calvin Harris";
  track.album = "";

  std::vector<std::string> tokens = {"play", "this", "is",  "you",
                                     "came", "for",  "by",  "calvin",
                                     "harris"};
  auto example = labelgen::project_labels(tokens, track, cfg, "u1");
  REQUIRE(example.has_value());
  CHECK(example->id == "u1");
  CHECK(example->tokens == tokens);
  CHECK(example->source == corpus::Source::EngagementFine);
  CHECK(example->fine() ==
        std::vector<FineTag>{FineTag::Default, FineTag::BTitle, FineTag::ITitle,
                             FineTag::ITitle, FineTag::ITitle, FineTag::ITitle,
                             FineTag::Default, FineTag::BArtist,
                             FineTag::IArtist});
}

TEST_CASE("project_labels drops the candidate when the title does not match") {
  ProjectionConfig cfg;
  engagement::TrackMetadata track{"Zzyzx Road", "Stone Sour", ""};
  CHECK_FALSE(labelgen::project_labels({"play", "something", "else"}, track, cfg)
                  .has_value());

  // An artist-only match is not enough.
  engagement::TrackMetadata t2{"Zzyzx Road", "Stone Sour", ""};
  CHECK_FALSE(
      labelgen::project_labels({"play", "stone", "sour"}, t2, cfg).has_value());
}

TEST_CASE("project_labels resolves overlaps by confidence then field order") {
  ProjectionConfig cfg;
  // Title and artist share the surface "the the"; the title wins the overlap
  // because ties are broken title first, and the artist is left unmatched.
  engagement::TrackMetadata track{"The The", "The The", ""};
  std::vector<std::string> tokens = {"play", "the", "the"};
  auto example = labelgen::project_labels(tokens, track, cfg);
  REQUIRE(example.has_value());
  CHECK(example->fine() == std::vector<FineTag>{FineTag::Default,
                                                FineTag::BTitle,
                                                FineTag::ITitle});
}

TEST_CASE("project_labels places disjoint fields independently") {
  ProjectionConfig cfg;
  engagement::TrackMetadata track{"Kingdom of Rain", "The The", "Dusk"};
  std::vector<std::string> tokens = {"play", "kingdom", "of",  "rain", "by",
                                     "the",  "the",     "from", "dusk"};
  auto example = labelgen::project_labels(tokens, track, cfg);
  REQUIRE(example.has_value());
  CHECK(example->fine() ==
        std::vector<FineTag>{FineTag::Default, FineTag::BTitle, FineTag::ITitle,
                             FineTag::ITitle, FineTag::Default, FineTag::BArtist,
                             FineTag::IArtist, FineTag::Default,
                             FineTag::BAlbum});
}

TEST_CASE("project_labels output is always valid BIO over the token count") {
  Rng rng(16);
  const std::vector<std::string> pool = {"play", "the", "one", "song", "train",
                                         "hello", "by", "from", "album"};
  ProjectionConfig cfg;
  int produced = 0;
  for (int it = 0; it < 400; ++it) {
    std::size_t n = 1 + rng.uniform_index(9);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(random_word(rng, pool));
    engagement::TrackMetadata track;
    track.title = random_word(rng, pool);
    if (rng.bernoulli(0.7)) track.title += " " + random_word(rng, pool);
    track.artist = random_word(rng, pool);
    track.album = rng.bernoulli(0.5) ? random_word(rng, pool) : "";
    auto example = labelgen::project_labels(tokens, track, cfg);
    if (!example) continue;
    ++produced;
    CHECK(corpus::validate_example(*example).empty());
    CHECK(example->size() == n);
    // The title span must be present in every accepted projection.
    bool has_title = false;
    for (FineTag t : example->fine())
      if (t == FineTag::BTitle) has_title = true;
    CHECK(has_title);
  }
  CHECK(produced > 50);
}
