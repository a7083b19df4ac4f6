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

#include <cmath>
#include <string>
#include <vector>

#include "engagetag/corpus.hpp"
#include "engagetag/decode.hpp"
#include "engagetag/eval.hpp"
#include "engagetag/kb.hpp"
#include "engagetag/rng.hpp"
#include "engagetag/synthgen.hpp"
#include "engagetag/tagger.hpp"
#include "helpers.hpp"

namespace corpus = engagetag::corpus;
namespace decode = engagetag::decode;
namespace eval = engagetag::eval;
namespace kb = engagetag::kb;
namespace synthgen = engagetag::synthgen;
namespace tagger = engagetag::tagger;
using corpus::Kind;
using engagetag::Rng;

namespace {

// Small synthetic world shared by the evaluate/run_grid tests.
struct World {
  kb::KnowledgeBase k;
  synthgen::CorpusBundle train;
  synthgen::CorpusBundle test;
  tagger::Model model;

  World() : model(make()) {}

 private:
  tagger::Model make() {
    synthgen::GeneratorConfig cfg;
    cfg.n_artists = 3;
    cfg.songs_per_artist = 2;
    cfg.seed = 5;
    k = synthgen::gen_kb(cfg);
    train = synthgen::gen_corpus(k, cfg, 24);
    synthgen::GeneratorConfig tcfg = cfg;
    tcfg.seed = 6;
    test = synthgen::gen_corpus(k, tcfg, 8);
    tagger::Hyperparams hy;
    hy.d_e = 4;
    hy.hidden = 4;
    hy.epochs = 1;
    hy.batch_size = 4;
    hy.dropout = 0.0;
    tagger::Model m = tagger::make_model(
        hy, tagger::build_vocab({&train.coarse, &train.fine}, 1));
    tagger::train(m, train.coarse, train.fine);
    return m;
  }
};

}  // namespace

TEST_CASE("utterance_error_rate counts exact-match failures") {
  std::vector<std::vector<int>> golds = {{0, 1}, {0}, {1, 2, 0}, {2}};
  std::vector<std::vector<int>> preds = golds;
  CHECK(eval::utterance_error_rate(preds, golds) == 0.0);
  preds[2][1] = 0;
  CHECK(eval::utterance_error_rate(preds, golds) == 0.25);
  preds[0][0] = 2;
  CHECK(eval::utterance_error_rate(preds, golds) == 0.5);

  // Brute-force oracle over random labelings.
  Rng rng(31);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<std::vector<int>> g, p;
    const std::size_t n = 1 + rng.uniform_index(8);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len = 1 + rng.uniform_index(5);
      std::vector<int> gi, pi;
      for (std::size_t t = 0; t < len; ++t) {
        gi.push_back(static_cast<int>(rng.uniform_index(3)));
        pi.push_back(static_cast<int>(rng.uniform_index(3)));
      }
      if (gi != pi) ++wrong;
      g.push_back(gi);
      p.push_back(pi);
    }
    CHECK(eval::utterance_error_rate(p, g) ==
          static_cast<double>(wrong) / static_cast<double>(n));
  }
}

TEST_CASE("utterance_error_rate rejects mismatched input") {
  CHECK_THROWS(eval::utterance_error_rate({}, {}));
  CHECK_THROWS(eval::utterance_error_rate({{0}}, {{0}, {1}}));
  CHECK_THROWS(eval::utterance_error_rate({{0, 1}}, {{0}}));
}

TEST_CASE("mean_sem matches reference statistics") {
  // Cross-checked against an independent statistics package.
  auto [m1, s1] = eval::mean_sem({0.1071, 0.0958, 0.0951, 0.0989, 0.0904});
  CHECK(m1 == doctest::Approx(0.097459999999999991).epsilon(1e-15));
  CHECK(s1 == doctest::Approx(0.002767417568781409).epsilon(1e-12));

  auto [m2, s2] = eval::mean_sem({1.0, 1.0, 1.0});
  CHECK(m2 == 1.0);
  CHECK(s2 == 0.0);

  auto [m3, s3] = eval::mean_sem({0.0, 2.0});
  CHECK(m3 == 1.0);
  CHECK(s3 == 1.0);

  CHECK_THROWS(eval::mean_sem({}));
  CHECK_THROWS(eval::mean_sem({0.5}));
}

TEST_CASE("welch_t_test matches reference statistics") {
  const std::vector<double> a = {0.1071, 0.0958, 0.0951, 0.0989, 0.0904};
  const std::vector<double> b = {0.0869, 0.0825, 0.0829, 0.0805, 0.0779};
  auto r = eval::welch_t_test(a, b);
  CHECK(r.t == doctest::Approx(4.8788324447780083).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.0026160437033873238).epsilon(1e-10));

  // Swapping the samples flips the sign and keeps the p-value.
  auto rev = eval::welch_t_test(b, a);
  CHECK(rev.t == doctest::Approx(-r.t).epsilon(1e-15));
  CHECK(rev.p == doctest::Approx(r.p).epsilon(1e-12));

  auto uneven = eval::welch_t_test({3.1, 2.7, 3.3, 2.9}, {2.1, 2.0, 2.6});
  CHECK(uneven.t == doctest::Approx(3.3911649915626381).epsilon(1e-12));
  CHECK(uneven.p == doctest::Approx(0.02966286542081243).epsilon(1e-10));
}

TEST_CASE("welch_t_test handles degenerate samples") {
  auto same = eval::welch_t_test({0.5, 0.5, 0.5}, {0.5, 0.5});
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);

  auto apart = eval::welch_t_test({1.0, 1.0}, {2.0, 2.0});
  CHECK(apart.p == 0.0);

  CHECK_THROWS(eval::welch_t_test({1.0}, {1.0, 2.0}));
  CHECK_THROWS(eval::welch_t_test({1.0, 2.0}, {}));
}

TEST_CASE("evaluate leaves fields unset for empty test sets") {
  World w;
  corpus::Dataset empty_cg{{}, Kind::CG};
  corpus::Dataset empty_fg{{}, Kind::FG};
  auto report = eval::evaluate(w.model, empty_cg, empty_fg, w.k);
  CHECK_FALSE(report.cgeer.has_value());
  CHECK_FALSE(report.fgeer.has_value());
  CHECK_FALSE(report.fgeer_kb.has_value());
  CHECK_FALSE(report.kb_activation_rate.has_value());
  CHECK(report.n_cg == 0);
  CHECK(report.n_fg == 0);
  CHECK(report.diagnostics.empty());
}

TEST_CASE("evaluate computes rates that match a hand recomputation") {
  World w;
  auto report =
      eval::evaluate(w.model, w.test.coarse, w.test.fine, w.k, 5);
  REQUIRE(report.cgeer.has_value());
  REQUIRE(report.fgeer.has_value());
  REQUIRE(report.fgeer_kb.has_value());
  REQUIRE(report.kb_activation_rate.has_value());
  CHECK(report.n_cg == 8);
  CHECK(report.n_fg == 8);
  CHECK(report.diagnostics.size() == 8);

  // Recompute every metric with direct predict/beam/rerank calls.
  std::vector<std::vector<int>> cg_preds, cg_golds;
  for (const auto& ex : w.test.coarse.examples) {
    cg_preds.push_back(tagger::predict_tags(w.model, ex.tokens, Kind::CG));
    cg_golds.push_back(corpus::label_ids(ex));
  }
  CHECK(*report.cgeer == eval::utterance_error_rate(cg_preds, cg_golds));

  std::vector<std::vector<int>> top1, chosen, golds;
  std::size_t activated = 0;
  for (const auto& ex : w.test.fine.examples) {
    auto hyps = decode::beam_search(
        decode::lattice_from_probs(
            tagger::head_probs(w.model, ex.tokens, Kind::FG)),
        5, Kind::FG);
    auto [best, diag] = kb::rerank(w.k, ex.tokens, hyps);
    top1.push_back(hyps[0].labels);
    chosen.push_back(best.labels);
    golds.push_back(corpus::label_ids(ex));
    if (diag.activated) ++activated;
  }
  CHECK(*report.fgeer == eval::utterance_error_rate(top1, golds));
  CHECK(*report.fgeer_kb == eval::utterance_error_rate(chosen, golds));
  CHECK(*report.kb_activation_rate == doctest::Approx(activated / 8.0));
  for (std::size_t i = 0; i < report.diagnostics.size(); ++i) {
    CHECK(report.diagnostics[i].id == w.test.fine.examples[i].id);
  }
}

TEST_CASE("an empty KB never changes the beam's choice") {
  World w;
  kb::KnowledgeBase empty;
  auto report = eval::evaluate(w.model, w.test.coarse, w.test.fine, empty, 5);
  REQUIRE(report.fgeer.has_value());
  REQUIRE(report.fgeer_kb.has_value());
  CHECK(*report.fgeer_kb == *report.fgeer);
}

TEST_CASE("a zeroed model predicts Default everywhere") {
  World w;
  tagger::Model zero = w.model;
  for (auto& r : tagger::param_refs(zero.params))
    std::fill(r.data, r.data + r.size, 0.0);
  auto report = eval::evaluate(zero, w.test.coarse, w.test.fine, w.k, 3);
  // Every test utterance contains a title span, so everything is wrong.
  CHECK(*report.cgeer == 1.0);
  CHECK(*report.fgeer == 1.0);
  CHECK(*report.fgeer_kb == 1.0);
  // All-Default hypotheses never bind two entities.
  CHECK(*report.kb_activation_rate == 0.0);
  CHECK_FALSE(report.fgeer_on_activated.has_value());
  CHECK_FALSE(report.fgeer_kb_on_activated.has_value());
}

TEST_CASE("run_grid produces ordered cells with per-seed metrics") {
  World w;
  eval::GridConfig gc;
  gc.human_sizes = {8, 4};
  gc.engagement_multipliers = {1, 0};
  gc.engagement_unit_size = 6;
  gc.n_seeds = 2;
  gc.beam = 3;
  gc.hyper.d_e = 4;
  gc.hyper.hidden = 4;
  gc.hyper.epochs = 1;
  gc.hyper.batch_size = 4;
  gc.hyper.dropout = 0.0;

  auto report = eval::run_grid(gc, w.train.coarse, w.train.fine,
                               w.test.coarse, w.test.fine, w.k);
  REQUIRE(report.cells.size() == 4);
  // Sorted by (human_size, multiplier) regardless of config order.
  CHECK(report.cells[0].human_size == 4);
  CHECK(report.cells[0].multiplier == 0);
  CHECK(report.cells[1].human_size == 4);
  CHECK(report.cells[1].multiplier == 1);
  CHECK(report.cells[2].human_size == 8);
  CHECK(report.cells[3].multiplier == 1);

  for (const auto& cell : report.cells) {
    REQUIRE(cell.values.count("cgeer") == 1);
    CHECK(cell.values.at("cgeer").size() == 2);
    if (cell.multiplier == 0) {
      // Baseline cells have no fine-grained stage.
      CHECK(cell.values.count("fgeer") == 0);
      CHECK(cell.values.count("fgeer_kb") == 0);
    } else {
      CHECK(cell.values.at("fgeer").size() == 2);
      CHECK(cell.values.at("fgeer_kb").size() == 2);
    }
  }

  // Bit-identical on a second run.
  auto again = eval::run_grid(gc, w.train.coarse, w.train.fine, w.test.coarse,
                              w.test.fine, w.k);
  REQUIRE(again.cells.size() == report.cells.size());
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    CHECK(again.cells[i].values == report.cells[i].values);
  }
}

TEST_CASE("run_grid validates its configuration") {
  World w;
  eval::GridConfig gc;
  gc.human_sizes = {4};
  gc.engagement_multipliers = {0};
  gc.n_seeds = 1;  // SEM needs two
  CHECK_THROWS(eval::run_grid(gc, w.train.coarse, w.train.fine, w.test.coarse,
                              w.test.fine, w.k));
  gc.n_seeds = 2;
  gc.human_sizes = {10000};
  CHECK_THROWS(eval::run_grid(gc, w.train.coarse, w.train.fine, w.test.coarse,
                              w.test.fine, w.k));
  gc.human_sizes = {4};
  gc.engagement_multipliers = {50};
  gc.engagement_unit_size = 1000;
  CHECK_THROWS(eval::run_grid(gc, w.train.coarse, w.train.fine, w.test.coarse,
                              w.test.fine, w.k));
}

TEST_CASE("save_grid_tsv writes one row per cell metric") {
  eval::GridReport report;
  eval::GridCell base;
  base.human_size = 4;
  base.multiplier = 0;
  base.values["cgeer"] = {0.1, 0.2};
  eval::GridCell full;
  full.human_size = 4;
  full.multiplier = 1;
  full.values["cgeer"] = {0.1, 0.1};
  full.values["fgeer"] = {0.3, 0.5};
  full.values["fgeer_kb"] = {0.2, 0.4};
  report.cells = {base, full};

  testutil::TempDir dir;
  const std::string path = dir.file("grid.tsv");
  eval::save_grid_tsv(report, path);
  CHECK(testutil::read_file(path) ==
        "human_size\tmultiplier\tmetric\tmean\tsem\tn_seeds\n"
        "4\t0\tcgeer\t0.150000\t0.050000\t2\n"
        "4\t1\tcgeer\t0.100000\t0.000000\t2\n"
        "4\t1\tfgeer\t0.400000\t0.100000\t2\n"
        "4\t1\tfgeer_kb\t0.300000\t0.100000\t2\n");

  CHECK_THROWS(eval::save_grid_tsv(report, dir.file("no/such/dir/x.tsv")));
}

TEST_CASE("format_grid renders rows and Welch baselines") {
  eval::GridReport report;
  eval::GridCell base;
  base.human_size = 4;
  base.multiplier = 0;
  base.values["cgeer"] = {0.2, 0.3};
  eval::GridCell full;
  full.human_size = 4;
  full.multiplier = 2;
  full.values["cgeer"] = {0.1, 0.15};
  full.values["fgeer"] = {0.3, 0.5};
  full.values["fgeer_kb"] = {0.2, 0.4};
  report.cells = {base, full};

  const std::string text = eval::format_grid(report);
  CHECK(text.find("human_size") != std::string::npos);
  CHECK(text.find("0.250000+-0.050000") != std::string::npos);  // baseline cg
  CHECK(text.find("0.400000+-0.100000") != std::string::npos);  // fgeer
  // The baseline row has no fine metrics.
  CHECK(text.find("welch cgeer human=4 mult=2 vs mult=0") != std::string::npos);
  auto w = eval::welch_t_test(base.values["cgeer"], full.values["cgeer"]);
  char frag[64];
  std::snprintf(frag, sizeof(frag), "t=%.6f", w.t);
  CHECK(text.find(frag) != std::string::npos);
}
