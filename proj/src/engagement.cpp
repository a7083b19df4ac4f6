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

#include "engagetag/engagement.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "engagetag/labelgen.hpp"
#include "engagetag/log.hpp"
#include "engagetag/util.hpp"

namespace engagetag::engagement {

using nlohmann::json;

bool same_track(const TrackMetadata& a, const TrackMetadata& b) {
  return labelgen::normalize(a.title) == labelgen::normalize(b.title) &&
         labelgen::normalize(a.artist) == labelgen::normalize(b.artist) &&
         labelgen::normalize(a.album) == labelgen::normalize(b.album);
}

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::UtteranceIssued: return "utterance_issued";
    case EventKind::AssistantPlay: return "assistant_play";
    case EventKind::AssistantNotFound: return "assistant_not_found";
    case EventKind::UserAbort: return "user_abort";
    case EventKind::ManualPlay: return "manual_play";
    case EventKind::PlaybackEnd: return "playback_end";
  }
  fail("unknown event kind");
}

std::optional<EventKind> event_kind_from_name(std::string_view name) {
  static const std::map<std::string_view, EventKind> table = {
      {"utterance_issued", EventKind::UtteranceIssued},
      {"assistant_play", EventKind::AssistantPlay},
      {"assistant_not_found", EventKind::AssistantNotFound},
      {"user_abort", EventKind::UserAbort},
      {"manual_play", EventKind::ManualPlay},
      {"playback_end", EventKind::PlaybackEnd},
  };
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::vector<Session> segment_sessions(const std::vector<EngagementEvent>& events,
                                      SegmentStats* stats) {
  std::map<std::string, Session> by_id;
  for (const auto& ev : events) {
    auto& s = by_id[ev.session_id];
    s.session_id = ev.session_id;
    s.events.push_back(ev);
  }
  std::vector<Session> out;
  SegmentStats local;
  for (auto& [id, session] : by_id) {
    std::stable_sort(session.events.begin(), session.events.end(),
                     [](const EngagementEvent& a, const EngagementEvent& b) {
                       return a.ts_ms < b.ts_ms;
                     });
    bool has_utt = std::any_of(session.events.begin(), session.events.end(),
                               [](const EngagementEvent& e) {
                                 return e.kind == EventKind::UtteranceIssued;
                               });
    if (!has_utt) {
      ++local.dropped_no_utterance;
      log::warn(cat("session ", id, " has no utterance event, dropped"));
      continue;
    }
    ++local.sessions;
    out.push_back(std::move(session));
  }
  if (stats) *stats = local;
  return out;
}

namespace {

// Scans from `pos` for the resolution of a playback started at `start_ts`.
// Returns the PlaybackEnd duration if the playback ended cleanly, nullopt if
// it was aborted or superseded. `abort_ts` receives the abort timestamp when
// present.
std::optional<std::int64_t> resolve_playback(
    const std::vector<EngagementEvent>& events, std::size_t pos,
    std::size_t* next, std::optional<std::int64_t>* abort_ts) {
  *abort_ts = std::nullopt;
  for (std::size_t i = pos; i < events.size(); ++i) {
    const auto& ev = events[i];
    switch (ev.kind) {
      case EventKind::PlaybackEnd:
        *next = i + 1;
        return ev.duration_ms.value_or(0);
      case EventKind::UserAbort:
        *abort_ts = ev.ts_ms;
        *next = i + 1;
        return std::nullopt;
      case EventKind::AssistantPlay:
      case EventKind::ManualPlay:
      case EventKind::AssistantNotFound:
        // Superseded without resolution.
        *next = i;
        return std::nullopt;
      case EventKind::UtteranceIssued:
        break;
    }
  }
  *next = events.size();
  return std::nullopt;
}

// Finds the first ManualPlay at or after `pos` and checks that its playback
// reaches the threshold. Any other play attempt before it makes the session
// ambiguous.
std::optional<TrackMetadata> manual_correction(
    const std::vector<EngagementEvent>& events, std::size_t pos,
    std::int64_t threshold_ms) {
  for (std::size_t i = pos; i < events.size(); ++i) {
    const auto& ev = events[i];
    if (ev.kind == EventKind::ManualPlay) {
      if (!ev.track) return std::nullopt;
      std::size_t next = 0;
      std::optional<std::int64_t> abort_ts;
      auto dur = resolve_playback(events, i + 1, &next, &abort_ts);
      if (dur && *dur >= threshold_ms) return *ev.track;
      return std::nullopt;
    }
    if (ev.kind == EventKind::AssistantPlay ||
        ev.kind == EventKind::AssistantNotFound) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Signal> classify_signal(const Session& session,
                                      std::int64_t positive_threshold_ms) {
  const auto& ev = session.events;
  std::size_t i = 0;
  while (i < ev.size() && ev[i].kind != EventKind::UtteranceIssued) ++i;
  if (i == ev.size()) return std::nullopt;
  std::vector<std::string> tokens = ev[i].tokens;
  ++i;

  // Only the first assistant attempt after the utterance can yield a signal;
  // anything after an unresolved or dud attempt is ignored. This keeps
  // classification monotone in the threshold.
  for (; i < ev.size(); ++i) {
    if (ev[i].kind == EventKind::AssistantPlay) {
      if (!ev[i].track) return std::nullopt;
      TrackMetadata assistant = *ev[i].track;
      std::int64_t start_ts = ev[i].ts_ms;
      std::size_t next = 0;
      std::optional<std::int64_t> abort_ts;
      auto dur = resolve_playback(ev, i + 1, &next, &abort_ts);
      if (dur) {
        if (*dur >= positive_threshold_ms) {
          return Signal{Verdict::Positive, assistant, std::move(tokens)};
        }
        return std::nullopt;
      }
      if (!abort_ts || *abort_ts - start_ts >= positive_threshold_ms) {
        return std::nullopt;
      }
      auto manual = manual_correction(ev, next, positive_threshold_ms);
      if (!manual || same_track(*manual, assistant)) return std::nullopt;
      return Signal{Verdict::NegativeCorrected, *manual, std::move(tokens)};
    }
    if (ev[i].kind == EventKind::AssistantNotFound) {
      auto manual = manual_correction(ev, i + 1, positive_threshold_ms);
      if (!manual) return std::nullopt;
      return Signal{Verdict::NegativeCorrected, *manual, std::move(tokens)};
    }
  }
  return std::nullopt;
}

std::vector<HarvestItem> harvest(const std::vector<Session>& sessions,
                                 HarvestStats* stats,
                                 std::int64_t positive_threshold_ms) {
  std::vector<HarvestItem> out;
  HarvestStats local;
  for (const auto& session : sessions) {
    auto signal = classify_signal(session, positive_threshold_ms);
    if (!signal) {
      ++local.skipped;
      continue;
    }
    if (signal->verdict == Verdict::Positive) {
      ++local.positive;
    } else {
      ++local.negative;
    }
    out.push_back(HarvestItem{session.session_id,
                              std::move(signal->utterance_tokens),
                              std::move(signal->track)});
  }
  std::sort(out.begin(), out.end(),
            [](const HarvestItem& a, const HarvestItem& b) {
              return a.session_id < b.session_id;
            });
  if (stats) *stats = local;
  return out;
}

namespace {

json track_to_json(const TrackMetadata& t) {
  return json{{"title", t.title}, {"artist", t.artist}, {"album", t.album}};
}

TrackMetadata track_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, ": track must be an object");
  TrackMetadata t;
  t.title = j.value("title", std::string{});
  t.artist = j.value("artist", std::string{});
  t.album = j.value("album", std::string{});
  if (t.title.empty() || t.artist.empty()) {
    fail(where, ": track requires non-empty title and artist");
  }
  return t;
}

}  // namespace

std::vector<EngagementEvent> load_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open event file: ", path);
  std::vector<EngagementEvent> out;
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
    EngagementEvent ev;
    if (!j.contains("session") || !j["session"].is_string()) {
      fail(where, ": missing string field \"session\"");
    }
    ev.session_id = j["session"].get<std::string>();
    if (!j.contains("ts_ms") || !j["ts_ms"].is_number_integer()) {
      fail(where, ": missing integer field \"ts_ms\"");
    }
    ev.ts_ms = j["ts_ms"].get<std::int64_t>();
    if (ev.ts_ms < 0) fail(where, ": ts_ms must be >= 0");
    if (!j.contains("kind") || !j["kind"].is_string()) {
      fail(where, ": missing string field \"kind\"");
    }
    auto kind = event_kind_from_name(j["kind"].get<std::string>());
    if (!kind) fail(where, ": unknown kind \"", j["kind"].get<std::string>(), "\"");
    ev.kind = *kind;
    if (ev.kind == EventKind::UtteranceIssued) {
      if (!j.contains("tokens") || !j["tokens"].is_array()) {
        fail(where, ": utterance_issued requires \"tokens\" array");
      }
      for (const auto& t : j["tokens"]) {
        if (!t.is_string()) fail(where, ": tokens must be strings");
        ev.tokens.push_back(t.get<std::string>());
      }
    }
    if (ev.kind == EventKind::AssistantPlay || ev.kind == EventKind::ManualPlay) {
      if (!j.contains("track")) fail(where, ": play event requires \"track\"");
      ev.track = track_from_json(j["track"], where);
    }
    if (ev.kind == EventKind::PlaybackEnd) {
      if (!j.contains("duration_ms") || !j["duration_ms"].is_number_integer()) {
        fail(where, ": playback_end requires integer \"duration_ms\"");
      }
      ev.duration_ms = j["duration_ms"].get<std::int64_t>();
    }
    out.push_back(std::move(ev));
  }
  return out;
}

void save_events(const std::vector<EngagementEvent>& events,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write event file: ", path);
  for (const auto& ev : events) {
    json j{{"session", ev.session_id},
           {"ts_ms", ev.ts_ms},
           {"kind", std::string(event_kind_name(ev.kind))}};
    if (ev.kind == EventKind::UtteranceIssued) j["tokens"] = ev.tokens;
    if (ev.track) j["track"] = track_to_json(*ev.track);
    if (ev.duration_ms) j["duration_ms"] = *ev.duration_ms;
    out << j.dump() << "\n";
  }
  if (!out) fail("write failed: ", path);
}

std::vector<HarvestItem> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open pair file: ", path);
  std::vector<HarvestItem> out;
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
    HarvestItem item;
    if (!j.contains("id") || !j["id"].is_string()) {
      fail(where, ": missing string field \"id\"");
    }
    item.session_id = j["id"].get<std::string>();
    if (!j.contains("tokens") || !j["tokens"].is_array() || j["tokens"].empty()) {
      fail(where, ": missing non-empty \"tokens\" array");
    }
    for (const auto& t : j["tokens"]) {
      if (!t.is_string()) fail(where, ": tokens must be strings");
      item.tokens.push_back(t.get<std::string>());
    }
    if (!j.contains("track")) fail(where, ": missing \"track\"");
    item.track = track_from_json(j["track"], where);
    out.push_back(std::move(item));
  }
  return out;
}

void save_pairs(const std::vector<HarvestItem>& items, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write pair file: ", path);
  for (const auto& item : items) {
    json j{{"id", item.session_id},
           {"tokens", item.tokens},
           {"track", track_to_json(item.track)}};
    out << j.dump() << "\n";
  }
  if (!out) fail("write failed: ", path);
}

}  // namespace engagetag::engagement
