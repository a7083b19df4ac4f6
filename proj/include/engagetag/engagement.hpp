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

#ifndef ENGAGETAG_ENGAGEMENT_HPP_
#define ENGAGETAG_ENGAGEMENT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Turns raw session event streams into engagement signals: a long play is a
// positive signal, an abort followed by a manual correction is a negative
// one, and either yields an (utterance, track metadata) annotation candidate.

namespace engagetag::engagement {

// Canonical track record. Album may be empty.
struct TrackMetadata {
  std::string title;
  std::string artist;
  std::string album;

  friend bool operator==(const TrackMetadata&, const TrackMetadata&) = default;
};

// Field-wise equality after labelgen normalization.
bool same_track(const TrackMetadata& a, const TrackMetadata& b);

enum class EventKind {
  UtteranceIssued,
  AssistantPlay,
  AssistantNotFound,
  UserAbort,
  ManualPlay,
  PlaybackEnd,
};

struct EngagementEvent {
  std::string session_id;
  std::int64_t ts_ms = 0;
  EventKind kind = EventKind::UtteranceIssued;
  std::vector<std::string> tokens;          // UtteranceIssued
  std::optional<TrackMetadata> track;       // AssistantPlay / ManualPlay
  std::optional<std::int64_t> duration_ms;  // PlaybackEnd
};

struct Session {
  std::string session_id;
  std::vector<EngagementEvent> events;  // sorted by ts_ms, stable for ties
};

enum class Verdict { Positive, NegativeCorrected };

// One engagement signal: the finally accepted track (assistant-played for
// Positive, user-selected for NegativeCorrected) plus the utterance it
// annotates.
struct Signal {
  Verdict verdict = Verdict::Positive;
  TrackMetadata track;
  std::vector<std::string> utterance_tokens;
};

struct SegmentStats {
  std::size_t sessions = 0;
  std::size_t dropped_no_utterance = 0;
};

// Groups events by session id and sorts each session by timestamp (stable
// for ties). Sessions without an UtteranceIssued event are dropped with a
// counted warning. Output is sorted by session id.
std::vector<Session> segment_sessions(const std::vector<EngagementEvent>& events,
                                      SegmentStats* stats = nullptr);

inline constexpr std::int64_t kDefaultPositiveThresholdMs = 30000;

// Classifies one ordered session. Positive: an assistant play whose playback
// reaches the threshold with no intervening abort. NegativeCorrected: an
// assistant play aborted before the threshold (or an explicit not-found)
// followed by a manual play of a different track that itself reaches the
// threshold. Ambiguous sessions yield nullopt.
std::optional<Signal> classify_signal(
    const Session& session,
    std::int64_t positive_threshold_ms = kDefaultPositiveThresholdMs);

// Annotation candidate harvested from one session with a signal.
struct HarvestItem {
  std::string session_id;
  std::vector<std::string> tokens;
  TrackMetadata track;

  friend bool operator==(const HarvestItem&, const HarvestItem&) = default;
};

struct HarvestStats {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t skipped = 0;
};

// One item per session with a signal, in session-id order.
std::vector<HarvestItem> harvest(
    const std::vector<Session>& sessions, HarvestStats* stats = nullptr,
    std::int64_t positive_threshold_ms = kDefaultPositiveThresholdMs);

// Event JSONL:
//   {"session": str, "ts_ms": int, "kind": str, "tokens": [str]?,
//    "track": {"title","artist","album"}?, "duration_ms": int?}
std::vector<EngagementEvent> load_events(const std::string& path);
void save_events(const std::vector<EngagementEvent>& events,
                 const std::string& path);

// Harvested pairs as JSONL: {"id": str, "tokens": [str], "track": {...}}.
std::vector<HarvestItem> load_pairs(const std::string& path);
void save_pairs(const std::vector<HarvestItem>& items, const std::string& path);

std::string_view event_kind_name(EventKind kind);
std::optional<EventKind> event_kind_from_name(std::string_view name);

}  // namespace engagetag::engagement

#endif  // ENGAGETAG_ENGAGEMENT_HPP_
