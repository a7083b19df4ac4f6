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

#include "engagetag/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace engagetag::log {

namespace {

Level initial_threshold() {
  const char* env = std::getenv("ENGAGETAG_LOG");
  if (env == nullptr) return Level::Info;
  std::string v(env);
  if (v == "debug") return Level::Debug;
  if (v == "info") return Level::Info;
  if (v == "warn") return Level::Warn;
  if (v == "error") return Level::Error;
  return Level::Info;
}

Level& threshold_ref() {
  static Level level = initial_threshold();
  return level;
}

const char* tag(Level level) {
  switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
  }
  return "?";
}

}  // namespace

Level threshold() { return threshold_ref(); }
void set_threshold(Level level) { threshold_ref() = level; }

void write(Level level, const std::string& message) {
  if (level < threshold_ref()) return;
  std::cerr << "[" << tag(level) << "] " << message << "\n";
}

void debug(const std::string& message) { write(Level::Debug, message); }
void info(const std::string& message) { write(Level::Info, message); }
void warn(const std::string& message) { write(Level::Warn, message); }
void error(const std::string& message) { write(Level::Error, message); }

}  // namespace engagetag::log
