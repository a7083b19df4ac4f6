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

#ifndef ENGAGETAG_LOG_HPP_
#define ENGAGETAG_LOG_HPP_

#include <string>

namespace engagetag::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3 };

// Threshold below which messages are dropped. Initialized from the
// ENGAGETAG_LOG environment variable (debug|info|warn|error, default info).
Level threshold();
void set_threshold(Level level);

void write(Level level, const std::string& message);

void debug(const std::string& message);
void info(const std::string& message);
void warn(const std::string& message);
void error(const std::string& message);

}  // namespace engagetag::log

#endif  // ENGAGETAG_LOG_HPP_
