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

#include "engagetag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "engagetag/decode.hpp"
#include "engagetag/log.hpp"
#include "engagetag/rng.hpp"
#include "engagetag/util.hpp"

namespace engagetag::eval {

double utterance_error_rate(const std::vector<std::vector<int>>& preds,
                            const std::vector<std::vector<int>>& golds) {
  if (preds.size() != golds.size()) {
    fail("utterance_error_rate: ", preds.size(), " predictions vs ",
         golds.size(), " golds");
  }
  if (preds.empty()) fail("utterance_error_rate: no utterances");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != golds[i].size()) {
      fail("utterance_error_rate: utterance ", i, " has ", preds[i].size(),
           " predicted labels vs ", golds[i].size(), " gold labels");
    }
    if (preds[i] != golds[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(preds.size());
}

EvalReport evaluate(const tagger::Model& model, const corpus::Dataset& test_cg,
                    const corpus::Dataset& test_fg,
                    const kb::KnowledgeBase& kb_, int beam) {
  EvalReport report;
  if (!test_cg.examples.empty()) {
    std::vector<std::vector<int>> preds, golds;
    preds.reserve(test_cg.examples.size());
    for (const auto& ex : test_cg.examples) {
      preds.push_back(tagger::predict_tags(model, ex.tokens, corpus::Kind::CG));
      golds.push_back(corpus::label_ids(ex));
    }
    report.cgeer = utterance_error_rate(preds, golds);
    report.n_cg = test_cg.examples.size();
  }

  if (!test_fg.examples.empty()) {
    std::vector<std::vector<int>> top1, reranked, golds;
    std::vector<std::vector<int>> top1_act, reranked_act, golds_act;
    std::size_t activated = 0;
    for (const auto& ex : test_fg.examples) {
      Mat probs = tagger::head_probs(model, ex.tokens, corpus::Kind::FG);
      auto hyps = decode::beam_search(decode::lattice_from_probs(probs), beam,
                                      corpus::Kind::FG);
      auto [chosen, diag] = kb::rerank(kb_, ex.tokens, hyps);
      top1.push_back(hyps[0].labels);
      reranked.push_back(chosen.labels);
      golds.push_back(corpus::label_ids(ex));
      if (diag.activated) {
        ++activated;
        top1_act.push_back(hyps[0].labels);
        reranked_act.push_back(chosen.labels);
        golds_act.push_back(golds.back());
      }
      report.diagnostics.push_back(kb::DiagnosticsRecord{ex.id, diag});
    }
    report.n_fg = test_fg.examples.size();
    report.fgeer = utterance_error_rate(top1, golds);
    report.fgeer_kb = utterance_error_rate(reranked, golds);
    report.kb_activation_rate =
        static_cast<double>(activated) / static_cast<double>(report.n_fg);
    if (activated > 0) {
      report.fgeer_on_activated = utterance_error_rate(top1_act, golds_act);
      report.fgeer_kb_on_activated =
          utterance_error_rate(reranked_act, golds_act);
    }
  }
  return report;
}

std::pair<double, double> mean_sem(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) fail("mean_sem requires at least 2 values, got ", n);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

WelchResult welch_t_test(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    fail("welch_t_test requires n >= 2 in each sample");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double ma = 0.0, mb = 0.0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= na;
  mb /= nb;
  double va = 0.0, vb = 0.0;
  for (double v : a) va += (v - ma) * (v - ma);
  for (double v : b) vb += (v - mb) * (v - mb);
  va /= na - 1.0;
  vb /= nb - 1.0;

  WelchResult r;
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    r.t = 0.0;
    r.df = na + nb - 2.0;
    r.p = ma == mb ? 1.0 : 0.0;
    if (ma != mb) r.t = ma > mb ? HUGE_VAL : -HUGE_VAL;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  const double num = se2 * se2;
  const double den = (va / na) * (va / na) / (na - 1.0) +
                     (vb / nb) * (vb / nb) / (nb - 1.0);
  r.df = num / den;
  boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(dist, -std::abs(r.t));
  return r;
}

namespace {

corpus::Dataset subsample(const corpus::Dataset& ds, std::size_t n, Rng& rng) {
  if (n > ds.examples.size()) {
    fail("requested ", n, " examples but the corpus has ", ds.examples.size());
  }
  std::vector<std::size_t> idx(ds.examples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  corpus::Dataset out;
  out.kind = ds.kind;
  out.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.examples.push_back(ds.examples[idx[i]]);
  return out;
}

constexpr std::uint64_t kGridSalt = 0x67726964;  // "grid"

}  // namespace

GridReport run_grid(const GridConfig& config, const corpus::Dataset& train_cg,
                    const corpus::Dataset& train_fg,
                    const corpus::Dataset& test_cg,
                    const corpus::Dataset& test_fg,
                    const kb::KnowledgeBase& kb_) {
  if (config.n_seeds < 2) fail("grid needs n_seeds >= 2 for SEM");
  auto human_sizes = config.human_sizes;
  auto multipliers = config.engagement_multipliers;
  std::sort(human_sizes.begin(), human_sizes.end());
  std::sort(multipliers.begin(), multipliers.end());

  const corpus::Dataset empty_fg{{}, corpus::Kind::FG};
  GridReport report;
  for (std::size_t hs : human_sizes) {
    for (int mult : multipliers) {
      GridCell cell;
      cell.human_size = hs;
      cell.multiplier = mult;
      const std::size_t fg_n =
          static_cast<std::size_t>(mult) * config.engagement_unit_size;
      for (int s = 0; s < config.n_seeds; ++s) {
        // Common random numbers across cells: the run seed depends on the
        // seed index only, so cells of one seed share the subsample shuffle
        // and a higher multiplier trains on a superset of a lower one.
        const std::uint64_t run_seed = derive_seed(
            config.hyper.seed, {kGridSalt, static_cast<std::uint64_t>(s)});
        Rng sample_rng(derive_seed(run_seed, {0x73616d70}));
        corpus::Dataset sub_cg = subsample(train_cg, hs, sample_rng);
        corpus::Dataset sub_fg = fg_n > 0 ? subsample(train_fg, fg_n, sample_rng)
                                          : empty_fg;
        tagger::Hyperparams hy = config.hyper;
        hy.seed = run_seed;
        if (fg_n == 0) hy.sample_weight_fg = 0.0;
        tagger::Model model = tagger::make_model(hy, tagger::build_vocab(
            {&sub_cg, &sub_fg}, 1));
        tagger::train(model, sub_cg, sub_fg);
        EvalReport er = evaluate(model, test_cg, mult > 0 ? test_fg : empty_fg,
                                 kb_, config.beam);
        cell.values["cgeer"].push_back(*er.cgeer);
        if (mult > 0) {
          cell.values["fgeer"].push_back(*er.fgeer);
          cell.values["fgeer_kb"].push_back(*er.fgeer_kb);
        }
        log::info(cat("grid cell human=", hs, " mult=", mult, " seed ", s,
                      ": cgeer=", *er.cgeer,
                      mult > 0 ? cat(" fgeer=", *er.fgeer, " fgeer_kb=",
                                     *er.fgeer_kb)
                               : std::string{}));
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void save_grid_tsv(const GridReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write grid report: ", path);
  out << "human_size\tmultiplier\tmetric\tmean\tsem\tn_seeds\n";
  for (const auto& cell : report.cells) {
    for (const auto& [metric, values] : cell.values) {
      auto [mean, sem] = mean_sem(values);
      out << cell.human_size << '\t' << cell.multiplier << '\t' << metric
          << '\t' << fmt(mean) << '\t' << fmt(sem) << '\t' << values.size()
          << "\n";
    }
  }
  if (!out) fail("write failed: ", path);
}

std::string format_grid(const GridReport& report) {
  std::ostringstream os;
  os << "human_size  mult  cgeer             fgeer             fgeer_kb\n";
  for (const auto& cell : report.cells) {
    char line[160];
    std::string cg = "-", fg = "-", fk = "-";
    auto render = [](const std::vector<double>& v) {
      auto [mean, sem] = mean_sem(v);
      return fmt(mean) + "+-" + fmt(sem);
    };
    if (auto it = cell.values.find("cgeer"); it != cell.values.end()) {
      cg = render(it->second);
    }
    if (auto it = cell.values.find("fgeer"); it != cell.values.end()) {
      fg = render(it->second);
    }
    if (auto it = cell.values.find("fgeer_kb"); it != cell.values.end()) {
      fk = render(it->second);
    }
    std::snprintf(line, sizeof(line), "%-10zu  %-4d  %-16s  %-16s  %-16s\n",
                  cell.human_size, cell.multiplier, cg.c_str(), fg.c_str(),
                  fk.c_str());
    os << line;
  }

  // Welch p-values against each human size's multiplier-0 baseline.
  for (const auto& cell : report.cells) {
    if (cell.multiplier == 0) continue;
    const GridCell* base = nullptr;
    for (const auto& other : report.cells) {
      if (other.human_size == cell.human_size && other.multiplier == 0) {
        base = &other;
        break;
      }
    }
    if (!base) continue;
    auto bit = base->values.find("cgeer");
    auto cit = cell.values.find("cgeer");
    if (bit == base->values.end() || cit == cell.values.end()) continue;
    WelchResult w = welch_t_test(bit->second, cit->second);
    os << "welch cgeer human=" << cell.human_size << " mult="
       << cell.multiplier << " vs mult=0: t=" << fmt(w.t) << " p=" << fmt(w.p)
       << "\n";
  }
  return os.str();
}

}  // namespace engagetag::eval
