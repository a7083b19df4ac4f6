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

#ifndef ENGAGETAG_EVAL_HPP_
#define ENGAGETAG_EVAL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "engagetag/corpus.hpp"
#include "engagetag/kb.hpp"
#include "engagetag/tagger.hpp"

// Utterance-level error rates, the KB-activated subset analysis, and the
// experiment grid with mean +- SEM reporting.

namespace engagetag::eval {

// Fraction of utterances with at least one wrong token label.
double utterance_error_rate(const std::vector<std::vector<int>>& preds,
                            const std::vector<std::vector<int>>& golds);

struct EvalReport {
  std::optional<double> cgeer;
  std::optional<double> fgeer;
  std::optional<double> fgeer_kb;
  std::optional<double> kb_activation_rate;
  std::optional<double> fgeer_on_activated;
  std::optional<double> fgeer_kb_on_activated;
  std::size_t n_cg = 0;
  std::size_t n_fg = 0;
  std::vector<kb::DiagnosticsRecord> diagnostics;  // one per fine utterance
};

// cgeer: coarse-head greedy predictions on test_cg. fgeer: fine-head beam
// top-1 on test_fg. fgeer_kb: KB-reranked output. The activated-subset
// metrics cover utterances whose diagnostics flag activation. Empty test
// sets leave the corresponding fields unset.
EvalReport evaluate(const tagger::Model& model, const corpus::Dataset& test_cg,
                    const corpus::Dataset& test_fg, const kb::KnowledgeBase& kb,
                    int beam = 5);

// mean and standard error of the mean (n-1 denominator); n >= 2 required.
std::pair<double, double> mean_sem(const std::vector<double>& values);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

// Welch two-sample t-test; each sample needs n >= 2.
WelchResult welch_t_test(const std::vector<double>& a,
                         const std::vector<double>& b);

struct GridConfig {
  std::vector<std::size_t> human_sizes{200, 1000};
  std::vector<int> engagement_multipliers{0, 1, 2};
  std::size_t engagement_unit_size = 2000;
  int n_seeds = 5;
  tagger::Hyperparams hyper;
  int beam = 5;
};

struct GridCell {
  std::size_t human_size = 0;
  int multiplier = 0;
  // metric name -> per-seed values, mean, sem. Baseline cells carry no
  // fine-grained metrics.
  std::map<std::string, std::vector<double>> values;
};

struct GridReport {
  std::vector<GridCell> cells;  // sorted by (human_size, multiplier)
};

// Per cell and seed: subsample the human coarse data, take
// multiplier * unit_size fine examples, train, evaluate. Requested sizes
// beyond the corpora are an error.
GridReport run_grid(const GridConfig& config, const corpus::Dataset& train_cg,
                    const corpus::Dataset& train_fg,
                    const corpus::Dataset& test_cg,
                    const corpus::Dataset& test_fg,
                    const kb::KnowledgeBase& kb);

// TSV rows human_size, multiplier, metric, mean, sem, n_seeds.
void save_grid_tsv(const GridReport& report, const std::string& path);

// Human-readable table with per-column Welch p-values against the
// multiplier-0 baseline where defined.
std::string format_grid(const GridReport& report);

}  // namespace engagetag::eval

#endif  // ENGAGETAG_EVAL_HPP_
