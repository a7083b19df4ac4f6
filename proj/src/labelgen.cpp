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

#include "engagetag/labelgen.hpp"

#include <algorithm>
#include <cctype>

namespace engagetag::labelgen {

std::string normalize(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (c < 0x80) {
      if (std::isspace(c)) {
        pending_space = true;
        continue;
      }
      if (std::ispunct(c)) continue;
      c = static_cast<unsigned char>(std::tolower(c));
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

namespace {

// Decodes UTF-8 into code points; bytes that do not form a valid sequence are
// taken as single code points so malformed input still gets a distance.
std::vector<std::uint32_t> code_points(const std::string& s) {
  std::vector<std::uint32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = c;
    if (c >= 0xF0) {
      extra = 3;
      cp = c & 0x07u;
    } else if (c >= 0xE0) {
      extra = 2;
      cp = c & 0x0Fu;
    } else if (c >= 0xC0) {
      extra = 1;
      cp = c & 0x1Fu;
    }
    if (i + extra >= s.size() && extra > 0) {
      out.push_back(c);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k <= extra; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0u) != 0x80u) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3Fu);
    }
    if (!ok) {
      out.push_back(c);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::size_t levenshtein_cp(const std::vector<std::uint32_t>& a,
                           const std::vector<std::uint32_t>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<std::size_t> prev(m + 1);
  std::vector<std::size_t> cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

std::size_t levenshtein(const std::string& a, const std::string& b) {
  return levenshtein_cp(code_points(a), code_points(b));
}

double fuzzy_confidence(const std::string& a, const std::string& b) {
  auto ca = code_points(a);
  auto cb = code_points(b);
  std::size_t longest = std::max(ca.size(), cb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_cp(ca, cb)) /
                   static_cast<double>(longest);
}

std::optional<SpanMatch> match_field(const std::string& field_value,
                                     corpus::EntityType field,
                                     const std::vector<std::string>& tokens,
                                     const ProjectionConfig& cfg) {
  const auto target = code_points(normalize(field_value));
  const std::size_t n = tokens.size();
  const std::size_t max_len =
      std::min<std::size_t>(n, static_cast<std::size_t>(cfg.max_span_len));

  std::optional<SpanMatch> best;
  // Longest spans first, then leftmost, so the first strict maximum found is
  // the tie-break winner.
  for (std::size_t len = max_len; len >= 1; --len) {
    for (std::size_t begin = 0; begin + len <= n; ++begin) {
      std::string joined;
      for (std::size_t k = 0; k < len; ++k) {
        if (k > 0) joined.push_back(' ');
        joined += tokens[begin + k];
      }
      auto span_cp = code_points(normalize(joined));
      std::size_t longest = std::max(target.size(), span_cp.size());
      if (longest == 0) {
        // Both empty after normalization; cannot happen for accepted matches
        // since field_value is non-empty, but keep the arithmetic total.
        continue;
      }
      double diff = target.size() > span_cp.size()
                        ? static_cast<double>(target.size() - span_cp.size())
                        : static_cast<double>(span_cp.size() - target.size());
      double upper = 1.0 - diff / static_cast<double>(longest);
      if (upper < cfg.threshold) continue;
      if (best && upper <= best->confidence) continue;
      double conf = 1.0 - static_cast<double>(levenshtein_cp(target, span_cp)) /
                              static_cast<double>(longest);
      if (conf < cfg.threshold) continue;
      if (!best || conf > best->confidence) {
        best = SpanMatch{field, begin, begin + len, conf};
      }
    }
  }
  return best;
}

std::optional<corpus::LabeledExample> project_labels(
    const std::vector<std::string>& tokens,
    const engagement::TrackMetadata& metadata, const ProjectionConfig& cfg,
    const std::string& id) {
  std::vector<SpanMatch> candidates;
  if (auto m = match_field(metadata.title, corpus::EntityType::Title, tokens, cfg)) {
    candidates.push_back(*m);
  }
  if (auto m = match_field(metadata.artist, corpus::EntityType::Artist, tokens, cfg)) {
    candidates.push_back(*m);
  }
  if (!metadata.album.empty()) {
    if (auto m = match_field(metadata.album, corpus::EntityType::Album, tokens, cfg)) {
      candidates.push_back(*m);
    }
  }
  // Acceptance order: confidence descending, then Title > Artist > Album.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SpanMatch& a, const SpanMatch& b) {
                     if (a.confidence != b.confidence) {
                       return a.confidence > b.confidence;
                     }
                     return static_cast<int>(a.field) < static_cast<int>(b.field);
                   });

  std::vector<SpanMatch> accepted;
  for (const auto& cand : candidates) {
    bool overlaps = std::any_of(accepted.begin(), accepted.end(),
                                [&](const SpanMatch& acc) {
                                  return cand.begin < acc.end &&
                                         acc.begin < cand.end;
                                });
    if (!overlaps) accepted.push_back(cand);
  }
  bool has_title = std::any_of(accepted.begin(), accepted.end(),
                               [](const SpanMatch& m) {
                                 return m.field == corpus::EntityType::Title;
                               });
  if (!has_title) return std::nullopt;

  std::vector<corpus::FineTag> labels(tokens.size(), corpus::FineTag::Default);
  for (const auto& m : accepted) {
    labels[m.begin] = corpus::begin_tag(m.field);
    for (std::size_t i = m.begin + 1; i < m.end; ++i) {
      labels[i] = corpus::inside_tag(m.field);
    }
  }
  return corpus::make_fine_example(id, tokens, std::move(labels));
}

}  // namespace engagetag::labelgen
