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

#include "engagetag/synthgen.hpp"

#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "engagetag/labelgen.hpp"
#include "engagetag/rng.hpp"
#include "engagetag/util.hpp"

namespace engagetag::synthgen {

namespace {

constexpr std::uint64_t kKbSalt = 0x6b626173;      // "kbas"
constexpr std::uint64_t kCorpusSalt = 0x636f7270;  // "corp"
constexpr std::uint64_t kEventSalt = 0x65766e74;   // "evnt"

constexpr char kConsonants[] = "bdfgklmnprstvz";
constexpr char kVowels[] = "aeiou";

const std::vector<std::string>& common_words() {
  static const std::vector<std::string> kWords = {"one", "something", "train",
                                                  "the the"};
  return kWords;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(std::move(tok));
  return out;
}

bool is_slot(const std::string& tok) {
  return tok == "{title}" || tok == "{artist}" || tok == "{album}";
}

// Every literal template word plus every common word. Pseudo words are kept
// out of this set's fuzzy neighborhood so that surface collisions only ever
// come from the deliberately ambiguous common words.
std::vector<std::string> blocked_words(const GeneratorConfig& config) {
  std::set<std::string> seen;
  for (const auto& tmpl : config.templates) {
    for (const auto& tok : split_ws(tmpl)) {
      if (!is_slot(tok)) seen.insert(labelgen::normalize(tok));
    }
  }
  for (const auto& phrase : common_words()) {
    for (const auto& word : split_ws(phrase)) seen.insert(word);
  }
  return {seen.begin(), seen.end()};
}

// Distinct pseudo words: CV syllables, globally unique, edit distance >= 2
// apart and fuzzy confidence < 0.8 against every blocked word.
class WordPool {
 public:
  explicit WordPool(std::vector<std::string> blocked)
      : blocked_(std::move(blocked)) {}

  std::string fresh(Rng& rng) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::string w;
      const std::size_t syllables = 2 + rng.uniform_index(2);
      for (std::size_t s = 0; s < syllables; ++s) {
        w += kConsonants[rng.uniform_index(sizeof(kConsonants) - 1)];
        w += kVowels[rng.uniform_index(sizeof(kVowels) - 1)];
      }
      if (usable(w)) {
        used_.push_back(w);
        return w;
      }
    }
    fail("word pool exhausted; lower n_artists or songs_per_artist");
  }

  std::string fresh_name(Rng& rng, std::size_t max_words) {
    std::string name = fresh(rng);
    const std::size_t extra = rng.uniform_index(max_words);
    for (std::size_t i = 0; i < extra; ++i) name += " " + fresh(rng);
    return name;
  }

 private:
  bool usable(const std::string& w) const {
    for (const auto& b : blocked_) {
      if (labelgen::fuzzy_confidence(w, b) >= 0.8) return false;
    }
    for (const auto& u : used_) {
      if (labelgen::levenshtein(w, u) < 2) return false;
    }
    return true;
  }

  std::vector<std::string> blocked_;
  std::vector<std::string> used_;
};

void append_value(const std::string& value, corpus::EntityType type,
                  std::vector<std::string>* tokens,
                  std::vector<corpus::FineTag>* labels) {
  const auto words = split_ws(value);
  for (std::size_t i = 0; i < words.size(); ++i) {
    tokens->push_back(words[i]);
    labels->push_back(i == 0 ? corpus::begin_tag(type)
                             : corpus::inside_tag(type));
  }
}

void apply_typos(Rng& rng, double rate, std::vector<std::string>* tokens) {
  if (rate <= 0.0) return;
  for (auto& tok : *tokens) {
    for (auto& ch : tok) {
      if (!std::islower(static_cast<unsigned char>(ch))) continue;
      if (!rng.bernoulli(rate)) continue;
      char repl = ch;
      while (repl == ch) {
        repl = static_cast<char>('a' + rng.uniform_index(26));
      }
      ch = repl;
    }
  }
}

void apply_drops(Rng& rng, double rate, std::vector<std::string>* tokens,
                 std::vector<corpus::FineTag>* labels) {
  if (rate <= 0.0) return;
  std::vector<bool> keep(tokens->size());
  bool any = false;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    keep[i] = !rng.bernoulli(rate);
    any = any || keep[i];
  }
  if (!any) return;  // never empty an utterance
  std::vector<std::string> new_tokens;
  std::vector<int> ids;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) continue;
    new_tokens.push_back(std::move((*tokens)[i]));
    ids.push_back(static_cast<int>((*labels)[i]));
  }
  corpus::repair_bio(ids, corpus::Kind::FG);
  labels->clear();
  for (int id : ids) labels->push_back(static_cast<corpus::FineTag>(id));
  *tokens = std::move(new_tokens);
}

void apply_dups(Rng& rng, double rate, std::vector<std::string>* tokens,
                std::vector<corpus::FineTag>* labels) {
  if (rate <= 0.0) return;
  std::vector<std::string> new_tokens;
  std::vector<corpus::FineTag> new_labels;
  for (std::size_t i = 0; i < tokens->size(); ++i) {
    new_tokens.push_back((*tokens)[i]);
    new_labels.push_back((*labels)[i]);
    if (!rng.bernoulli(rate)) continue;
    new_tokens.push_back((*tokens)[i]);
    const auto type = corpus::entity_type_of((*labels)[i]);
    new_labels.push_back(type ? corpus::inside_tag(*type)
                              : corpus::FineTag::Default);
  }
  *tokens = std::move(new_tokens);
  *labels = std::move(new_labels);
}

std::string padded_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "u%07zu", i);
  return buf;
}

void check_config(const GeneratorConfig& config) {
  const std::string err = validate_config(config);
  if (!err.empty()) fail("generator config: ", err);
}

}  // namespace

std::vector<std::string> default_templates() {
  return {
      "play {title}",
      "play {title} by {artist}",
      "{title}",
      "{title} by {artist}",
      "can you play {title} by {artist}",
      "play {title} from the album {album}",
      "i want to hear {title} by {artist}",
      "play the song {title}",
      "can you play {title} from {artist} new album",
      "put on {title} by {artist} please",
      "play something from {title} by {artist}",
      "play one track from {title} by {artist}",
  };
}

std::string validate_config(const GeneratorConfig& config) {
  if (config.n_artists < 1) return "n_artists must be >= 1";
  if (config.songs_per_artist < 1) return "songs_per_artist must be >= 1";
  if (config.templates.empty()) return "templates must not be empty";
  for (const auto& tmpl : config.templates) {
    bool has_title = false;
    for (const auto& tok : split_ws(tmpl)) {
      if (tok == "{title}") has_title = true;
    }
    if (!has_title) return cat("template '", tmpl, "' lacks a {title} slot");
  }
  const std::pair<double, const char*> rates[] = {
      {config.typo_char_rate, "typo_char_rate"},
      {config.token_drop_rate, "token_drop_rate"},
      {config.token_dup_rate, "token_dup_rate"},
      {config.correct_play_rate, "correct_play_rate"},
      {config.ambiguous_title_fraction, "ambiguous_title_fraction"},
  };
  for (const auto& [value, name] : rates) {
    if (!(value >= 0.0 && value <= 1.0)) {
      return cat(name, " must lie in [0, 1]");
    }
  }
  return "";
}

kb::KnowledgeBase gen_kb(const GeneratorConfig& config) {
  check_config(config);
  Rng rng(derive_seed(config.seed, {kKbSalt}));
  WordPool pool(blocked_words(config));

  std::vector<engagement::TrackMetadata> records;
  std::set<std::string> common_artists_used;
  for (int a = 0; a < config.n_artists; ++a) {
    std::string artist;
    if (rng.bernoulli(config.ambiguous_title_fraction)) {
      const auto& commons = common_words();
      const std::string pick = commons[rng.uniform_index(commons.size())];
      if (common_artists_used.insert(pick).second) artist = pick;
    }
    if (artist.empty()) artist = pool.fresh_name(rng, 2);
    const std::string album = pool.fresh_name(rng, 2);

    std::set<std::string> titles_used;
    for (int s = 0; s < config.songs_per_artist; ++s) {
      std::string title;
      if (rng.bernoulli(config.ambiguous_title_fraction)) {
        const auto& commons = common_words();
        const std::string pick = commons[rng.uniform_index(commons.size())];
        if (!titles_used.count(pick)) title = pick;
      }
      if (title.empty()) title = pool.fresh_name(rng, 2);
      titles_used.insert(title);
      records.push_back({title, artist, album});
    }
  }
  return kb::build_kb(std::move(records));
}

CorpusBundle gen_corpus(const kb::KnowledgeBase& kb,
                        const GeneratorConfig& config, std::size_t n) {
  check_config(config);
  if (kb.records.empty()) fail("gen_corpus: empty KB");
  Rng rng(derive_seed(config.seed, {kCorpusSalt}));

  CorpusBundle bundle;
  bundle.fine.kind = corpus::Kind::FG;
  bundle.coarse.kind = corpus::Kind::CG;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ridx = rng.uniform_index(kb.records.size());
    const auto& rec = kb.records[ridx];
    const auto tmpl =
        split_ws(config.templates[rng.uniform_index(config.templates.size())]);

    std::vector<std::string> tokens;
    std::vector<corpus::FineTag> labels;
    for (const auto& tok : tmpl) {
      if (tok == "{title}") {
        append_value(rec.title, corpus::EntityType::Title, &tokens, &labels);
      } else if (tok == "{artist}") {
        append_value(rec.artist, corpus::EntityType::Artist, &tokens, &labels);
      } else if (tok == "{album}") {
        if (rec.album.empty()) fail("gen_corpus: record ", ridx, " lacks album");
        append_value(rec.album, corpus::EntityType::Album, &tokens, &labels);
      } else {
        tokens.push_back(tok);
        labels.push_back(corpus::FineTag::Default);
      }
    }

    apply_typos(rng, config.typo_char_rate, &tokens);
    apply_drops(rng, config.token_drop_rate, &tokens, &labels);
    apply_dups(rng, config.token_dup_rate, &tokens, &labels);

    const std::string id = padded_id(i);
    bundle.coarse.examples.push_back(
        corpus::make_coarse_example(id, tokens, corpus::fine_to_coarse(labels)));
    bundle.fine.examples.push_back(
        corpus::make_fine_example(id, std::move(tokens), std::move(labels)));
    bundle.record_idx.push_back(ridx);
  }
  return bundle;
}

std::vector<engagement::EngagementEvent> gen_engagement_logs(
    const CorpusBundle& bundle, const kb::KnowledgeBase& kb,
    const GeneratorConfig& config) {
  check_config(config);
  if (bundle.record_idx.size() != bundle.fine.examples.size()) {
    fail("gen_engagement_logs: bundle record index out of sync");
  }
  if (config.correct_play_rate < 1.0 && kb.records.size() < 2) {
    fail("gen_engagement_logs: correct_play_rate < 1 needs >= 2 KB records");
  }
  Rng rng(derive_seed(config.seed, {kEventSalt}));

  std::vector<engagement::EngagementEvent> events;
  for (std::size_t i = 0; i < bundle.fine.examples.size(); ++i) {
    const auto& ex = bundle.fine.examples[i];
    const std::size_t ridx = bundle.record_idx[i];
    if (ridx >= kb.records.size()) {
      fail("gen_engagement_logs: record index ", ridx, " out of range");
    }
    const auto& rec = kb.records[ridx];
    const std::int64_t base = static_cast<std::int64_t>(i) * 200000;

    engagement::EngagementEvent utt;
    utt.session_id = ex.id;
    utt.ts_ms = base;
    utt.kind = engagement::EventKind::UtteranceIssued;
    utt.tokens = ex.tokens;
    events.push_back(std::move(utt));

    auto push = [&](engagement::EventKind kind, std::int64_t ts) {
      engagement::EngagementEvent ev;
      ev.session_id = ex.id;
      ev.ts_ms = ts;
      ev.kind = kind;
      events.push_back(std::move(ev));
      return events.size() - 1;
    };

    if (rng.bernoulli(config.correct_play_rate)) {
      const std::size_t play = push(engagement::EventKind::AssistantPlay, base + 1000);
      events[play].track = rec;
      const std::int64_t dur =
          30000 + static_cast<std::int64_t>(rng.uniform_index(60001));
      const std::size_t end =
          push(engagement::EventKind::PlaybackEnd, base + 1000 + dur);
      events[end].duration_ms = dur;
    } else {
      std::size_t other = ridx;
      while (other == ridx) other = rng.uniform_index(kb.records.size());
      const std::size_t play = push(engagement::EventKind::AssistantPlay, base + 1000);
      events[play].track = kb.records[other];
      const std::int64_t abort_ms =
          1000 + static_cast<std::int64_t>(rng.uniform_index(24001));
      push(engagement::EventKind::UserAbort, base + 1000 + abort_ms);
      const std::size_t manual =
          push(engagement::EventKind::ManualPlay, base + 3000 + abort_ms);
      events[manual].track = rec;
      const std::int64_t dur =
          30000 + static_cast<std::int64_t>(rng.uniform_index(60001));
      const std::size_t end =
          push(engagement::EventKind::PlaybackEnd, base + 3000 + abort_ms + dur);
      events[end].duration_ms = dur;
    }
  }
  return events;
}

}  // namespace engagetag::synthgen
