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

// Command-line front end: synth, harvest, project, train, eval, grid and
// rerank-demo subcommands, wired together through files. Configuration comes
// from an optional JSON file; flags win over the file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "engagetag/corpus.hpp"
#include "engagetag/decode.hpp"
#include "engagetag/engagement.hpp"
#include "engagetag/eval.hpp"
#include "engagetag/kb.hpp"
#include "engagetag/labelgen.hpp"
#include "engagetag/log.hpp"
#include "engagetag/rng.hpp"
#include "engagetag/synthgen.hpp"
#include "engagetag/tagger.hpp"
#include "engagetag/util.hpp"

namespace et = engagetag;
using nlohmann::json;

namespace {

// Sub-stream salts for the independently drawn pools.
constexpr std::uint64_t kHumanPoolSalt = 0x68756d61;  // "huma"
constexpr std::uint64_t kEngagePoolSalt = 0x656e6761; // "enga"
constexpr std::uint64_t kTestPoolSalt = 0x74657374;   // "test"

struct CliConfig {
  std::uint64_t seed = 1;
  int beam = 5;
  double threshold = 0.8;
  int min_count = 1;
  std::size_t n_human = 1000;
  std::size_t n_engagement = 4000;
  std::size_t n_test = 1000;
  et::synthgen::GeneratorConfig gen;
  et::tagger::Hyperparams hyper;
  et::eval::GridConfig grid;
};

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) et::fail("cannot open ", path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    et::fail(path, ": ", e.what());
  }
  return j;
}

template <class T>
void read_key(const json& j, const char* key, T* out) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const json::exception&) {
    et::fail("config key '", key, "' has the wrong type");
  }
}

void read_generator(const json& j, et::synthgen::GeneratorConfig* gen) {
  read_key(j, "n_artists", &gen->n_artists);
  read_key(j, "songs_per_artist", &gen->songs_per_artist);
  read_key(j, "templates", &gen->templates);
  read_key(j, "typo_char_rate", &gen->typo_char_rate);
  read_key(j, "token_drop_rate", &gen->token_drop_rate);
  read_key(j, "token_dup_rate", &gen->token_dup_rate);
  read_key(j, "correct_play_rate", &gen->correct_play_rate);
  read_key(j, "ambiguous_title_fraction", &gen->ambiguous_title_fraction);
}

void read_hyper(const json& j, et::tagger::Hyperparams* hyper) {
  read_key(j, "lr0", &hyper->lr0);
  read_key(j, "lr_decay", &hyper->lr_decay);
  read_key(j, "momentum", &hyper->momentum);
  read_key(j, "l2_lambda", &hyper->l2_lambda);
  read_key(j, "dropout", &hyper->dropout);
  read_key(j, "sample_weight_cg", &hyper->sample_weight_cg);
  read_key(j, "sample_weight_fg", &hyper->sample_weight_fg);
  read_key(j, "batch_size", &hyper->batch_size);
  read_key(j, "epochs", &hyper->epochs);
  read_key(j, "d_e", &hyper->d_e);
  read_key(j, "d_f", &hyper->d_f);
  read_key(j, "n_features", &hyper->n_features);
  read_key(j, "hidden", &hyper->hidden);
}

void read_grid(const json& j, et::eval::GridConfig* grid) {
  read_key(j, "human_sizes", &grid->human_sizes);
  read_key(j, "engagement_multipliers", &grid->engagement_multipliers);
  read_key(j, "engagement_unit_size", &grid->engagement_unit_size);
  read_key(j, "n_seeds", &grid->n_seeds);
}

CliConfig load_config(const std::string& path) {
  CliConfig cfg;
  if (path.empty()) return cfg;
  const json j = load_json_file(path);
  if (!j.is_object()) et::fail(path, ": config root must be an object");
  read_key(j, "seed", &cfg.seed);
  read_key(j, "beam", &cfg.beam);
  read_key(j, "threshold", &cfg.threshold);
  read_key(j, "min_count", &cfg.min_count);
  read_key(j, "n_human", &cfg.n_human);
  read_key(j, "n_engagement", &cfg.n_engagement);
  read_key(j, "n_test", &cfg.n_test);
  if (j.contains("generator")) read_generator(j.at("generator"), &cfg.gen);
  if (j.contains("hyper")) read_hyper(j.at("hyper"), &cfg.hyper);
  if (j.contains("grid")) read_grid(j.at("grid"), &cfg.grid);
  return cfg;
}

// The generator seed and the training seed both track the top-level seed.
void sync_seeds(CliConfig* cfg) {
  cfg->gen.seed = cfg->seed;
  cfg->hyper.seed = cfg->seed;
  cfg->grid.hyper = cfg->hyper;
  cfg->grid.beam = cfg->beam;
}

et::synthgen::GeneratorConfig pool_config(const CliConfig& cfg,
                                          std::uint64_t salt) {
  et::synthgen::GeneratorConfig gen = cfg.gen;
  gen.seed = et::derive_seed(cfg.seed, {salt});
  return gen;
}

et::corpus::Dataset empty_dataset(et::corpus::Kind kind) {
  et::corpus::Dataset d;
  d.kind = kind;
  return d;
}

// synthgen pool -> events -> harvest -> projection, the weak-label path.
et::corpus::Dataset project_pool(const et::synthgen::CorpusBundle& bundle,
                                 const et::kb::KnowledgeBase& kb,
                                 const et::synthgen::GeneratorConfig& gen,
                                 double threshold) {
  const auto events = et::synthgen::gen_engagement_logs(bundle, kb, gen);
  const auto sessions = et::engagement::segment_sessions(events);
  et::engagement::HarvestStats hstats;
  const auto pairs = et::engagement::harvest(sessions, &hstats);
  et::labelgen::ProjectionConfig pcfg;
  pcfg.threshold = threshold;
  et::corpus::Dataset out = empty_dataset(et::corpus::Kind::FG);
  std::size_t discarded = 0;
  for (const auto& pair : pairs) {
    auto ex = et::labelgen::project_labels(pair.tokens, pair.track, pcfg,
                                           pair.session_id);
    if (ex) {
      out.examples.push_back(std::move(*ex));
    } else {
      ++discarded;
    }
  }
  et::log::info(et::cat("projected ", out.examples.size(), " of ",
                        pairs.size(), " pairs (", discarded, " discarded, ",
                        hstats.positive, " positive, ", hstats.negative,
                        " corrected)"));
  return out;
}

int cmd_synth(const CliConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto kb = et::synthgen::gen_kb(cfg.gen);
  et::kb::save_kb(kb, out_dir + "/kb.tsv");

  const auto human_gen = pool_config(cfg, kHumanPoolSalt);
  const auto human = et::synthgen::gen_corpus(kb, human_gen, cfg.n_human);
  et::corpus::save_dataset(human.coarse, out_dir + "/human_cg.jsonl");

  const auto engage_gen = pool_config(cfg, kEngagePoolSalt);
  const auto engage = et::synthgen::gen_corpus(kb, engage_gen, cfg.n_engagement);
  et::engagement::save_events(
      et::synthgen::gen_engagement_logs(engage, kb, engage_gen),
      out_dir + "/events.jsonl");

  const auto test_gen = pool_config(cfg, kTestPoolSalt);
  const auto test = et::synthgen::gen_corpus(kb, test_gen, cfg.n_test);
  et::corpus::save_dataset(test.coarse, out_dir + "/test_cg.jsonl");
  et::corpus::save_dataset(test.fine, out_dir + "/test_fg.jsonl");

  et::log::info(et::cat("synth: ", kb.records.size(), " KB records, ",
                        cfg.n_human, " human, ", cfg.n_engagement,
                        " engagement, ", cfg.n_test, " test utterances -> ",
                        out_dir));
  return 0;
}

int cmd_harvest(const std::string& events_path, const std::string& out_path) {
  const auto events = et::engagement::load_events(events_path);
  et::engagement::SegmentStats sstats;
  const auto sessions = et::engagement::segment_sessions(events, &sstats);
  et::engagement::HarvestStats hstats;
  const auto pairs = et::engagement::harvest(sessions, &hstats);
  et::engagement::save_pairs(pairs, out_path);
  et::log::info(et::cat("harvest: ", sessions.size(), " sessions (",
                        sstats.dropped_no_utterance, " without utterance), ",
                        hstats.positive, " positive, ", hstats.negative,
                        " corrected, ", hstats.skipped, " skipped -> ",
                        out_path));
  return 0;
}

int cmd_project(const std::string& pairs_path, const std::string& kb_path,
                const std::string& out_path, double threshold) {
  const auto pairs = et::engagement::load_pairs(pairs_path);
  std::size_t unknown_tracks = 0;
  if (!kb_path.empty()) {
    const auto kb = et::kb::load_kb(kb_path);
    for (const auto& pair : pairs) {
      const auto it =
          kb.by_title.find(et::labelgen::normalize(pair.track.title));
      if (it == kb.by_title.end()) ++unknown_tracks;
    }
  }
  et::labelgen::ProjectionConfig pcfg;
  pcfg.threshold = threshold;
  et::corpus::Dataset out = empty_dataset(et::corpus::Kind::FG);
  std::size_t discarded = 0;
  for (const auto& pair : pairs) {
    auto ex = et::labelgen::project_labels(pair.tokens, pair.track, pcfg,
                                           pair.session_id);
    if (ex) {
      out.examples.push_back(std::move(*ex));
    } else {
      ++discarded;
    }
  }
  et::corpus::save_dataset(out, out_path);
  if (unknown_tracks > 0) {
    et::log::warn(et::cat(unknown_tracks, " played tracks missing from KB"));
  }
  et::log::info(et::cat("project: ", out.examples.size(), " labeled, ",
                        discarded, " discarded -> ", out_path));
  return 0;
}

int cmd_train(const CliConfig& cfg, const std::string& cg_path,
              const std::string& fg_path, const std::string& out_path) {
  et::corpus::Dataset cg = cg_path.empty()
                               ? empty_dataset(et::corpus::Kind::CG)
                               : et::corpus::load_dataset(cg_path, et::corpus::Kind::CG);
  et::corpus::Dataset fg = fg_path.empty()
                               ? empty_dataset(et::corpus::Kind::FG)
                               : et::corpus::load_dataset(fg_path, et::corpus::Kind::FG);
  et::tagger::Hyperparams hyper = cfg.hyper;
  if (cg.examples.empty()) hyper.sample_weight_cg = 0.0;
  if (fg.examples.empty()) hyper.sample_weight_fg = 0.0;

  auto vocab = et::tagger::build_vocab({&cg, &fg}, cfg.min_count);
  auto model = et::tagger::make_model(hyper, std::move(vocab));
  et::tagger::train(model, cg, fg);
  et::tagger::save_checkpoint(model, out_path);
  et::log::info(et::cat("train: ", cg.examples.size(), " coarse + ",
                        fg.examples.size(), " fine examples, vocab ",
                        model.vocab.size(), " -> ", out_path));
  return 0;
}

void print_metric(std::ostream& os, const char* name,
                  const std::optional<double>& value) {
  if (value) os << " " << name << "=" << *value;
}

int cmd_eval(const std::string& ckpt_path, const std::string& cg_path,
             const std::string& fg_path, const std::string& kb_path, int beam,
             const std::string& out_path, const std::string& diag_path) {
  const auto model = et::tagger::load_checkpoint(ckpt_path);
  const auto test_cg = cg_path.empty()
                           ? empty_dataset(et::corpus::Kind::CG)
                           : et::corpus::load_dataset(cg_path, et::corpus::Kind::CG);
  const auto test_fg = fg_path.empty()
                           ? empty_dataset(et::corpus::Kind::FG)
                           : et::corpus::load_dataset(fg_path, et::corpus::Kind::FG);
  const auto kb = kb_path.empty() ? et::kb::KnowledgeBase{}
                                  : et::kb::load_kb(kb_path);
  const auto report = et::eval::evaluate(model, test_cg, test_fg, kb, beam);

  std::ostream& os = std::cout;
  os << "n_cg=" << report.n_cg << " n_fg=" << report.n_fg;
  print_metric(os, "cgeer", report.cgeer);
  print_metric(os, "fgeer", report.fgeer);
  print_metric(os, "fgeer_kb", report.fgeer_kb);
  print_metric(os, "kb_activation_rate", report.kb_activation_rate);
  print_metric(os, "fgeer_on_activated", report.fgeer_on_activated);
  print_metric(os, "fgeer_kb_on_activated", report.fgeer_kb_on_activated);
  os << "\n";

  if (!out_path.empty()) {
    json j;
    j["n_cg"] = report.n_cg;
    j["n_fg"] = report.n_fg;
    auto set = [&j](const char* key, const std::optional<double>& v) {
      if (v) j[key] = *v;
    };
    set("cgeer", report.cgeer);
    set("fgeer", report.fgeer);
    set("fgeer_kb", report.fgeer_kb);
    set("kb_activation_rate", report.kb_activation_rate);
    set("fgeer_on_activated", report.fgeer_on_activated);
    set("fgeer_kb_on_activated", report.fgeer_kb_on_activated);
    std::ofstream out(out_path);
    if (!out) et::fail("cannot write ", out_path);
    out << j.dump(2) << "\n";
  }
  if (!diag_path.empty()) et::kb::save_diagnostics(report.diagnostics, diag_path);
  return 0;
}

int cmd_grid(const CliConfig& cfg, const std::string& out_path) {
  const auto kb = et::synthgen::gen_kb(cfg.gen);

  std::size_t max_human = 0;
  for (std::size_t n : cfg.grid.human_sizes) max_human = std::max(max_human, n);
  int max_mult = 0;
  for (int m : cfg.grid.engagement_multipliers) max_mult = std::max(max_mult, m);
  const std::size_t need_fg =
      static_cast<std::size_t>(max_mult) * cfg.grid.engagement_unit_size;

  const auto human_gen = pool_config(cfg, kHumanPoolSalt);
  const auto train_cg =
      et::synthgen::gen_corpus(kb, human_gen, max_human).coarse;

  et::corpus::Dataset train_fg = empty_dataset(et::corpus::Kind::FG);
  if (need_fg > 0) {
    // Overshoot: harvest/projection discards a small fraction of sessions.
    const std::size_t pool = need_fg + need_fg / 5 + 100;
    const auto engage_gen = pool_config(cfg, kEngagePoolSalt);
    const auto bundle = et::synthgen::gen_corpus(kb, engage_gen, pool);
    train_fg = project_pool(bundle, kb, engage_gen, cfg.threshold);
    if (train_fg.examples.size() < need_fg) {
      et::fail("projection yielded ", train_fg.examples.size(),
               " examples, grid needs ", need_fg);
    }
    train_fg.examples.resize(need_fg);
  }

  const auto test_gen = pool_config(cfg, kTestPoolSalt);
  const auto test = et::synthgen::gen_corpus(kb, test_gen, cfg.n_test);

  const auto report = et::eval::run_grid(cfg.grid, train_cg, train_fg,
                                         test.coarse, test.fine, kb);
  et::eval::save_grid_tsv(report, out_path);
  std::cout << et::eval::format_grid(report);
  et::log::info(et::cat("grid -> ", out_path));
  return 0;
}

int cmd_rerank_demo(const std::string& ckpt_path, const std::string& kb_path,
                    const std::string& utterance, int beam) {
  const auto model = et::tagger::load_checkpoint(ckpt_path);
  const auto kb = et::kb::load_kb(kb_path);

  std::vector<std::string> tokens;
  {
    std::istringstream is(utterance);
    std::string tok;
    while (is >> tok) tokens.push_back(tok);
  }
  if (tokens.empty()) et::fail("empty utterance");

  const auto probs = et::tagger::head_probs(model, tokens, et::corpus::Kind::FG);
  const auto lattice = et::decode::lattice_from_probs(probs);
  const auto hyps = et::decode::beam_search(lattice, beam, et::corpus::Kind::FG);
  const auto [chosen, diag] = et::kb::rerank(kb, tokens, hyps);

  for (std::size_t r = 0; r < hyps.size(); ++r) {
    std::cout << "rank " << r << " score " << hyps[r].score << " ["
              << et::kb::status_name(diag.statuses[r]) << "]";
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      std::cout << " " << tokens[t] << "/"
                << et::corpus::tag_name(et::corpus::Kind::FG,
                                        hyps[r].labels[t]);
    }
    std::vector<et::corpus::FineTag> fine;
    for (int id : hyps[r].labels) {
      fine.push_back(static_cast<et::corpus::FineTag>(id));
    }
    for (const auto& [type, surface] :
         et::decode::extract_entities(tokens, fine)) {
      std::cout << " (" << et::corpus::entity_type_name(type) << "=\""
                << surface << "\")";
    }
    std::cout << "\n";
  }
  std::cout << "chosen rank " << diag.chosen_rank
            << (diag.activated ? "" : " (kb not activated)") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-supervision entity labeling pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override the config seed")
      ->each([&](const std::string&) { seed_set = true; });

  std::string out_path;
  std::string kb_path;
  std::string events_path, pairs_path, cg_path, fg_path, ckpt_path, utterance;
  std::string report_path, diag_path;
  int beam = 0;
  bool beam_set = false;
  double threshold = 0.0;
  bool threshold_set = false;
  std::size_t human_size = 0;
  bool human_set = false;
  int engagement_mult = 0;
  bool mult_set = false;

  auto add_beam = [&](CLI::App* cmd) {
    cmd->add_option("--beam", beam, "beam width")
        ->each([&](const std::string&) { beam_set = true; });
  };
  auto add_threshold = [&](CLI::App* cmd) {
    cmd->add_option("--threshold", threshold, "fuzzy confidence threshold")
        ->each([&](const std::string&) { threshold_set = true; });
  };

  CLI::App* synth = app.add_subcommand("synth", "generate KB, corpora, events");
  synth->add_option("--out", out_path, "output directory")->required();
  synth->add_option("--human-size", human_size, "human pool size")
      ->each([&](const std::string&) { human_set = true; });
  synth->add_option("--engagement-mult", engagement_mult,
                    "engagement pool size in grid units")
      ->each([&](const std::string&) { mult_set = true; });

  CLI::App* harvest = app.add_subcommand("harvest", "events -> (utterance, track) pairs");
  harvest->add_option("--events", events_path, "event JSONL")
      ->required()->check(CLI::ExistingFile);
  harvest->add_option("--out", out_path, "output pairs JSONL")->required();

  CLI::App* project = app.add_subcommand("project", "pairs -> fine labeled dataset");
  project->add_option("--pairs", pairs_path, "pairs JSONL")
      ->required()->check(CLI::ExistingFile);
  project->add_option("--kb", kb_path, "KB TSV (optional coverage check)")
      ->check(CLI::ExistingFile);
  project->add_option("--out", out_path, "output dataset JSONL")->required();
  add_threshold(project);

  CLI::App* train = app.add_subcommand("train", "train the tagger");
  train->add_option("--cg", cg_path, "coarse dataset JSONL")
      ->check(CLI::ExistingFile);
  train->add_option("--fg", fg_path, "fine dataset JSONL")
      ->check(CLI::ExistingFile);
  train->add_option("--out", out_path, "checkpoint path")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint")
      ->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--test-cg", cg_path, "coarse test set")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--test-fg", fg_path, "fine test set")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--kb", kb_path, "KB TSV")->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", report_path, "JSON report path");
  eval_cmd->add_option("--diagnostics", diag_path, "rerank diagnostics JSONL");
  add_beam(eval_cmd);

  CLI::App* grid = app.add_subcommand("grid", "run the evaluation grid");
  grid->add_option("--out", out_path, "grid TSV path")->required();
  grid->add_option("--human-size", human_size, "restrict to one human size")
      ->each([&](const std::string&) { human_set = true; });
  grid->add_option("--engagement-mult", engagement_mult,
                   "restrict to one engagement multiplier")
      ->each([&](const std::string&) { mult_set = true; });
  add_threshold(grid);

  CLI::App* demo = app.add_subcommand("rerank-demo", "print top hypotheses with KB statuses");
  demo->add_option("--ckpt", ckpt_path, "checkpoint")
      ->required()->check(CLI::ExistingFile);
  demo->add_option("--kb", kb_path, "KB TSV")
      ->required()->check(CLI::ExistingFile);
  demo->add_option("--utterance", utterance, "utterance text")->required();
  add_beam(demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    CliConfig cfg = load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (beam_set) cfg.beam = beam;
    if (threshold_set) cfg.threshold = threshold;
    sync_seeds(&cfg);

    if (synth->parsed()) {
      if (human_set) cfg.n_human = human_size;
      if (mult_set) {
        cfg.n_engagement = static_cast<std::size_t>(engagement_mult) *
                           cfg.grid.engagement_unit_size;
      }
      return cmd_synth(cfg, out_path);
    }
    if (harvest->parsed()) return cmd_harvest(events_path, out_path);
    if (project->parsed()) {
      return cmd_project(pairs_path, kb_path, out_path, cfg.threshold);
    }
    if (train->parsed()) return cmd_train(cfg, cg_path, fg_path, out_path);
    if (eval_cmd->parsed()) {
      return cmd_eval(ckpt_path, cg_path, fg_path, kb_path, cfg.beam,
                      report_path, diag_path);
    }
    if (grid->parsed()) {
      if (human_set) cfg.grid.human_sizes = {human_size};
      if (mult_set) cfg.grid.engagement_multipliers = {engagement_mult};
      return cmd_grid(cfg, out_path);
    }
    if (demo->parsed()) {
      return cmd_rerank_demo(ckpt_path, kb_path, utterance, cfg.beam);
    }
    et::fail("no subcommand");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
