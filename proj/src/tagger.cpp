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

#include "engagetag/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "engagetag/kernels.hpp"
#include "engagetag/log.hpp"
#include "engagetag/util.hpp"

namespace engagetag::tagger {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitSalt = 0x696e6974;   // "init"
constexpr std::uint64_t kTrainSalt = 0x74726169;  // "trai"

constexpr const char* kPadToken = "<pad>";
constexpr const char* kUnkToken = "<unk>";

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

int Vocab::id_of(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

Vocab build_vocab(const std::vector<const corpus::Dataset*>& datasets,
                  int min_count) {
  if (datasets.empty()) fail("build_vocab requires at least one dataset");
  bool any = false;
  std::map<std::string, std::size_t> freq;
  for (const auto* ds : datasets) {
    for (const auto& ex : ds->examples) {
      any = true;
      for (const auto& tok : ex.tokens) {
        if (tok == kPadToken || tok == kUnkToken) continue;
        ++freq[tok];
      }
    }
  }
  if (!any) fail("build_vocab: all datasets are empty");

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : freq) {
    if (n >= static_cast<std::size_t>(min_count)) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  v.min_count = min_count;
  v.id_to_token = {kPadToken, kUnkToken};
  for (auto& [tok, n] : kept) v.id_to_token.push_back(tok);
  for (std::size_t i = 0; i < v.id_to_token.size(); ++i) {
    v.token_to_id[v.id_to_token[i]] = static_cast<int>(i);
  }
  return v;
}

std::string validate_hyper(const Hyperparams& h) {
  if (h.sample_weight_cg < 0 || h.sample_weight_fg < 0) {
    return "sampling weights must be >= 0";
  }
  if (h.sample_weight_cg + h.sample_weight_fg <= 0) {
    return "sampling weights must not both be zero";
  }
  if (h.dropout < 0 || h.dropout >= 1) return "dropout must be in [0, 1)";
  if (h.batch_size < 1) return "batch_size must be >= 1";
  if (h.epochs < 0) return "epochs must be >= 0";
  if (h.d_e < 1) return "d_e must be >= 1";
  if (h.hidden < 1) return "hidden must be >= 1";
  if (h.d_f < 0) return "d_f must be >= 0";
  if (h.d_f > 0 && h.n_features < 1) {
    return "n_features must be >= 1 when d_f > 0";
  }
  if (h.lr0 <= 0) return "lr0 must be > 0";
  if (h.lr_decay <= 0 || h.lr_decay > 1) return "lr_decay must be in (0, 1]";
  if (h.momentum < 0 || h.momentum >= 1) return "momentum must be in [0, 1)";
  if (h.l2_lambda < 0) return "l2_lambda must be >= 0";
  return {};
}

namespace {

void add_mat_ref(std::vector<ParamRef>& refs, std::string name, Mat& m,
                 bool is_bias, Scope scope) {
  refs.push_back(ParamRef{std::move(name), m.data(), m.size(),
                          {m.rows, m.cols}, is_bias, scope});
}

void add_vec_ref(std::vector<ParamRef>& refs, std::string name, Vec& v,
                 bool is_bias, Scope scope) {
  refs.push_back(
      ParamRef{std::move(name), v.data(), v.size(), {v.size()}, is_bias, scope});
}

void add_dir_refs(std::vector<ParamRef>& refs, const std::string& prefix,
                  LstmDir& d) {
  add_mat_ref(refs, prefix + ".wx", d.wx, false, Scope::Shared);
  add_mat_ref(refs, prefix + ".wh", d.wh, false, Scope::Shared);
  add_vec_ref(refs, prefix + ".b", d.b, true, Scope::Shared);
}

}  // namespace

std::vector<ParamRef> param_refs(ModelParams& p) {
  std::vector<ParamRef> refs;
  add_mat_ref(refs, "embedding", p.embedding, false, Scope::Shared);
  if (p.feat_embedding.size() > 0) {
    add_mat_ref(refs, "feat_embedding", p.feat_embedding, false, Scope::Shared);
  }
  add_dir_refs(refs, "l1.fwd", p.layer1.fwd);
  add_dir_refs(refs, "l1.bwd", p.layer1.bwd);
  add_dir_refs(refs, "l2.fwd", p.layer2.fwd);
  add_dir_refs(refs, "l2.bwd", p.layer2.bwd);
  add_mat_ref(refs, "proj", p.proj, false, Scope::Shared);
  add_mat_ref(refs, "coarse.w", p.w_coarse, false, Scope::CoarseHead);
  add_vec_ref(refs, "coarse.b", p.b_coarse, true, Scope::CoarseHead);
  add_mat_ref(refs, "fine.w", p.w_fine, false, Scope::FineHead);
  add_vec_ref(refs, "fine.b", p.b_fine, true, Scope::FineHead);
  return refs;
}

namespace {

ModelParams shaped_params(const Hyperparams& h, int vocab_size) {
  ModelParams p;
  const auto he = static_cast<std::size_t>(h.hidden);
  const auto in1 = static_cast<std::size_t>(h.d_e + h.d_f);
  p.embedding =
      Mat(static_cast<std::size_t>(vocab_size), static_cast<std::size_t>(h.d_e));
  if (h.d_f > 0) {
    p.feat_embedding = Mat(static_cast<std::size_t>(h.n_features),
                           static_cast<std::size_t>(h.d_f));
  }
  auto dir = [he](std::size_t in_dim) {
    LstmDir d;
    d.wx = Mat(4 * he, in_dim);
    d.wh = Mat(4 * he, he);
    d.b = Vec(4 * he, 0.0);
    return d;
  };
  p.layer1.fwd = dir(in1);
  p.layer1.bwd = dir(in1);
  p.layer2.fwd = dir(2 * he);
  p.layer2.bwd = dir(2 * he);
  p.proj = Mat(he, 2 * he);
  p.w_coarse = Mat(corpus::kCoarseTagCount, he);
  p.b_coarse = Vec(corpus::kCoarseTagCount, 0.0);
  p.w_fine = Mat(corpus::kFineTagCount, he);
  p.b_fine = Vec(corpus::kFineTagCount, 0.0);
  return p;
}

}  // namespace

ModelParams zeros_like_params(const ModelParams& p) {
  ModelParams z = p;
  for (auto& r : param_refs(z)) std::fill(r.data, r.data + r.size, 0.0);
  return z;
}

ModelParams init_params(const Hyperparams& hyper, int vocab_size, Rng& rng) {
  if (auto err = validate_hyper(hyper); !err.empty()) fail(err);
  if (vocab_size < 2) fail("vocab must include the reserved ids");
  ModelParams p = shaped_params(hyper, vocab_size);
  for (auto& r : param_refs(p)) {
    if (r.is_bias) continue;
    for (std::size_t i = 0; i < r.size; ++i) r.data[i] = rng.uniform(-0.1, 0.1);
  }
  return p;
}

namespace {

void lstm_dir_forward(const LstmDir& p, const Mat& input, bool reverse,
                      DirTrace& tr) {
  const std::size_t T = input.rows;
  const std::size_t in_dim = input.cols;
  const std::size_t h = p.wh.cols;
  tr.gates = Mat(T, 4 * h);
  tr.cell = Mat(T, h);
  tr.tanh_cell = Mat(T, h);
  tr.hidden = Mat(T, h);
  Vec z(4 * h);
  const double* h_prev = nullptr;
  const double* c_prev = nullptr;
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse ? T - 1 - s : s;
    std::copy(p.b.begin(), p.b.end(), z.begin());
    kernels::matvec_acc(p.wx.data(), input.row(t), z.data(), 4 * h, in_dim);
    if (h_prev) kernels::matvec_acc(p.wh.data(), h_prev, z.data(), 4 * h, h);
    double* g = tr.gates.row(t);
    for (std::size_t i = 0; i < h; ++i) g[i] = sigmoid(z[i]);
    for (std::size_t i = 0; i < h; ++i) g[h + i] = sigmoid(z[h + i]);
    for (std::size_t i = 0; i < h; ++i) g[2 * h + i] = std::tanh(z[2 * h + i]);
    for (std::size_t i = 0; i < h; ++i) g[3 * h + i] = sigmoid(z[3 * h + i]);
    double* c = tr.cell.row(t);
    for (std::size_t i = 0; i < h; ++i) {
      c[i] = g[i] * g[2 * h + i] + (c_prev ? g[h + i] * c_prev[i] : 0.0);
    }
    double* tc = tr.tanh_cell.row(t);
    for (std::size_t i = 0; i < h; ++i) tc[i] = std::tanh(c[i]);
    double* hh = tr.hidden.row(t);
    for (std::size_t i = 0; i < h; ++i) hh[i] = g[3 * h + i] * tc[i];
    h_prev = hh;
    c_prev = c;
  }
}

// Backpropagates one direction. `dout` is the T x 2h gradient at the layer's
// concatenated output; `col_off` selects this direction's half. Parameter
// gradients accumulate into `g`, input gradients into `dinput`.
void lstm_dir_backward(const LstmDir& p, const Mat& input, const DirTrace& tr,
                       const Mat& dout, std::size_t col_off, bool reverse,
                       LstmDir& g, Mat& dinput) {
  const std::size_t T = input.rows;
  const std::size_t in_dim = input.cols;
  const std::size_t h = p.wh.cols;
  Vec dh_rec(h, 0.0);
  Vec dc_rec(h, 0.0);
  Vec dz(4 * h);
  for (std::size_t s = T; s-- > 0;) {
    const std::size_t t = reverse ? T - 1 - s : s;
    const bool has_prev = s > 0;
    const std::size_t tprev = reverse ? t + 1 : t - 1;
    const double* gt = tr.gates.row(t);
    const double* tc = tr.tanh_cell.row(t);
    const double* c_prev = has_prev ? tr.cell.row(tprev) : nullptr;
    const double* h_prev = has_prev ? tr.hidden.row(tprev) : nullptr;
    const double* dout_t = dout.row(t) + col_off;
    for (std::size_t i = 0; i < h; ++i) {
      const double ig = gt[i];
      const double fg = gt[h + i];
      const double gg = gt[2 * h + i];
      const double og = gt[3 * h + i];
      const double dh = dout_t[i] + dh_rec[i];
      const double dog = dh * tc[i];
      const double dc = dc_rec[i] + dh * og * (1.0 - tc[i] * tc[i]);
      const double dig = dc * gg;
      const double dgg = dc * ig;
      const double dfg = c_prev ? dc * c_prev[i] : 0.0;
      dc_rec[i] = dc * fg;
      dz[i] = dig * ig * (1.0 - ig);
      dz[h + i] = dfg * fg * (1.0 - fg);
      dz[2 * h + i] = dgg * (1.0 - gg * gg);
      dz[3 * h + i] = dog * og * (1.0 - og);
    }
    kernels::axpy(1.0, dz.data(), g.b.data(), 4 * h);
    kernels::outer_acc(g.wx.data(), dz.data(), input.row(t), 4 * h, in_dim);
    if (h_prev) kernels::outer_acc(g.wh.data(), dz.data(), h_prev, 4 * h, h);
    kernels::matvec_t_acc(p.wx.data(), dz.data(), dinput.row(t), 4 * h, in_dim);
    std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
    if (has_prev) {
      kernels::matvec_t_acc(p.wh.data(), dz.data(), dh_rec.data(), 4 * h, h);
    }
  }
}

void run_layer(const LstmLayer& p, Mat input, double dropout, bool train_mode,
               Rng* rng, LayerTrace& tr) {
  tr.input = std::move(input);
  lstm_dir_forward(p.fwd, tr.input, false, tr.fwd);
  lstm_dir_forward(p.bwd, tr.input, true, tr.bwd);
  const std::size_t T = tr.input.rows;
  const std::size_t h = p.fwd.wh.cols;
  tr.concat = Mat(T, 2 * h);
  for (std::size_t t = 0; t < T; ++t) {
    double* row = tr.concat.row(t);
    const double* f = tr.fwd.hidden.row(t);
    const double* b = tr.bwd.hidden.row(t);
    std::copy(f, f + h, row);
    std::copy(b, b + h, row + h);
  }
  if (train_mode && dropout > 0.0) {
    if (!rng) fail("train-mode forward requires an rng for dropout");
    tr.drop_mask = Mat(T, 2 * h);
    const double keep_scale = 1.0 / (1.0 - dropout);
    for (double& m : tr.drop_mask.v) {
      m = rng->bernoulli(dropout) ? 0.0 : keep_scale;
    }
    tr.output = Mat(T, 2 * h);
    for (std::size_t i = 0; i < tr.output.v.size(); ++i) {
      tr.output.v[i] = tr.concat.v[i] * tr.drop_mask.v[i];
    }
  } else {
    tr.drop_mask = Mat();
    tr.output = tr.concat;
  }
}

const Mat& head_weights(const ModelParams& p, corpus::Kind head) {
  return head == corpus::Kind::CG ? p.w_coarse : p.w_fine;
}

const Vec& head_bias(const ModelParams& p, corpus::Kind head) {
  return head == corpus::Kind::CG ? p.b_coarse : p.b_fine;
}

}  // namespace

ForwardTrace forward(const ModelParams& params,
                     const std::vector<int>& token_ids,
                     std::optional<int> feature_id, corpus::Kind head,
                     bool train_mode, Rng* rng, double dropout) {
  const std::size_t T = token_ids.size();
  if (T == 0) fail("forward requires at least one token");
  const std::size_t d_e = params.embedding.cols;
  const std::size_t d_f = params.feat_embedding.cols;
  if (d_f > 0 && !feature_id) {
    fail("model has a feature embedding but no feature id was given");
  }
  if (d_f == 0 && feature_id) {
    fail("model has no feature embedding but a feature id was given");
  }
  if (feature_id &&
      (*feature_id < 0 ||
       static_cast<std::size_t>(*feature_id) >= params.feat_embedding.rows)) {
    fail("feature id ", *feature_id, " out of range");
  }

  Mat input(T, d_e + d_f);
  for (std::size_t t = 0; t < T; ++t) {
    const int id = token_ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= params.embedding.rows) {
      fail("token id ", id, " out of range for vocab of ",
           params.embedding.rows);
    }
    double* row = input.row(t);
    const double* e = params.embedding.row(static_cast<std::size_t>(id));
    std::copy(e, e + d_e, row);
    if (d_f > 0) {
      const double* fe =
          params.feat_embedding.row(static_cast<std::size_t>(*feature_id));
      std::copy(fe, fe + d_f, row + d_e);
    }
  }

  ForwardTrace tr;
  run_layer(params.layer1, std::move(input), dropout, train_mode, rng, tr.l1);
  run_layer(params.layer2, tr.l1.output, dropout, train_mode, rng, tr.l2);

  const std::size_t h = params.proj.rows;
  tr.proj_out = Mat(T, h);
  for (std::size_t t = 0; t < T; ++t) {
    kernels::matvec(params.proj.data(), tr.l2.output.row(t),
                    tr.proj_out.row(t), h, params.proj.cols);
  }

  const Mat& w = head_weights(params, head);
  const Vec& b = head_bias(params, head);
  const std::size_t L = w.rows;
  tr.logits = Mat(T, L);
  tr.probs = Mat(T, L);
  for (std::size_t t = 0; t < T; ++t) {
    double* logit = tr.logits.row(t);
    std::copy(b.begin(), b.end(), logit);
    kernels::matvec_acc(w.data(), tr.proj_out.row(t), logit, L, w.cols);
    double mx = logit[0];
    for (std::size_t l = 1; l < L; ++l) mx = std::max(mx, logit[l]);
    double* prob = tr.probs.row(t);
    double sum = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      prob[l] = std::exp(logit[l] - mx);
      sum += prob[l];
    }
    for (std::size_t l = 0; l < L; ++l) prob[l] /= sum;
  }
  return tr;
}

namespace {

void check_batch(const Batch& batch, corpus::Kind head) {
  if (batch.empty()) fail("empty mini-batch");
  for (const auto* ex : batch) {
    const bool coarse = ex->is_coarse();
    if (coarse != (head == corpus::Kind::CG)) {
      fail("batch example ", ex->id, " label space does not match the ",
           head == corpus::Kind::CG ? "coarse" : "fine", " head");
    }
    const corpus::Source want = head == corpus::Kind::CG
                                    ? corpus::Source::HumanCoarse
                                    : corpus::Source::EngagementFine;
    if (ex->source != want) {
      fail("batch example ", ex->id, " source does not match the head");
    }
  }
}

// Cross entropy of one utterance from its logits: sum over tokens of
// logsumexp(row) - logit[gold].
double ce_from_logits(const Mat& logits, const std::vector<int>& gold) {
  double ce = 0.0;
  for (std::size_t t = 0; t < logits.rows; ++t) {
    const double* row = logits.row(t);
    double mx = row[0];
    for (std::size_t l = 1; l < logits.cols; ++l) mx = std::max(mx, row[l]);
    double sum = 0.0;
    for (std::size_t l = 0; l < logits.cols; ++l) sum += std::exp(row[l] - mx);
    ce += mx + std::log(sum) - row[static_cast<std::size_t>(gold[t])];
  }
  return ce;
}

bool l2_covers(const ParamRef& r, corpus::Kind head) {
  if (r.is_bias) return false;
  if (r.scope == Scope::Shared) return true;
  return (r.scope == Scope::CoarseHead) == (head == corpus::Kind::CG);
}

double l2_term(const ModelParams& params, corpus::Kind head,
               double l2_lambda) {
  if (l2_lambda == 0.0) return 0.0;
  double ss = 0.0;
  auto& mut = const_cast<ModelParams&>(params);
  for (const auto& r : param_refs(mut)) {
    if (l2_covers(r, head)) ss += kernels::sumsq(r.data, r.size);
  }
  return l2_lambda * ss;
}

void record_ce(LossBreakdown& out, corpus::Kind head, double ce) {
  if (head == corpus::Kind::CG) {
    out.ce_coarse += ce;
  } else {
    out.ce_fine += ce;
  }
}

}  // namespace

LossBreakdown loss(const Model& model, const Batch& batch, corpus::Kind head,
                   double l2_lambda, bool train_mode, Rng* rng,
                   std::optional<int> feature_id) {
  check_batch(batch, head);
  const double dropout = train_mode ? model.hyper.dropout : 0.0;
  LossBreakdown out;
  for (const auto* ex : batch) {
    auto tr = forward(model.params, model.vocab.encode(ex->tokens), feature_id,
                      head, train_mode, rng, dropout);
    record_ce(out, head, ce_from_logits(tr.logits, corpus::label_ids(*ex)));
  }
  out.l2 = l2_term(model.params, head, l2_lambda);
  out.total = out.ce_coarse + out.ce_fine + out.l2;
  return out;
}

ModelParams grad(const Model& model, const Batch& batch, corpus::Kind head,
                 double l2_lambda, LossBreakdown* breakdown, bool train_mode,
                 Rng* rng, std::optional<int> feature_id) {
  check_batch(batch, head);
  const ModelParams& params = model.params;
  const double dropout = train_mode ? model.hyper.dropout : 0.0;
  ModelParams g = zeros_like_params(params);
  LossBreakdown bd;

  const std::size_t h = params.proj.rows;
  const std::size_t d_e = params.embedding.cols;
  const std::size_t d_f = params.feat_embedding.cols;
  const Mat& w_head = head_weights(params, head);
  Mat& gw_head = head == corpus::Kind::CG ? g.w_coarse : g.w_fine;
  Vec& gb_head = head == corpus::Kind::CG ? g.b_coarse : g.b_fine;

  for (const auto* ex : batch) {
    const std::vector<int> ids = model.vocab.encode(ex->tokens);
    const std::vector<int> gold = corpus::label_ids(*ex);
    auto tr = forward(params, ids, feature_id, head, train_mode, rng, dropout);
    record_ce(bd, head, ce_from_logits(tr.logits, gold));

    const std::size_t T = ids.size();
    const std::size_t L = tr.logits.cols;

    // Head and projection.
    Mat dproj_out(T, h);
    Vec dlogit(L);
    for (std::size_t t = 0; t < T; ++t) {
      const double* prob = tr.probs.row(t);
      for (std::size_t l = 0; l < L; ++l) dlogit[l] = prob[l];
      dlogit[static_cast<std::size_t>(gold[t])] -= 1.0;
      kernels::outer_acc(gw_head.data(), dlogit.data(), tr.proj_out.row(t), L,
                         h);
      kernels::axpy(1.0, dlogit.data(), gb_head.data(), L);
      kernels::matvec_t_acc(w_head.data(), dlogit.data(), dproj_out.row(t), L,
                            h);
    }

    Mat dl2out(T, 2 * h);
    for (std::size_t t = 0; t < T; ++t) {
      kernels::outer_acc(g.proj.data(), dproj_out.row(t), tr.l2.output.row(t),
                         h, 2 * h);
      kernels::matvec_t_acc(params.proj.data(), dproj_out.row(t),
                            dl2out.row(t), h, 2 * h);
    }

    // Dropout backward is an elementwise product with the stored mask.
    if (tr.l2.drop_mask.size() > 0) {
      for (std::size_t i = 0; i < dl2out.v.size(); ++i) {
        dl2out.v[i] *= tr.l2.drop_mask.v[i];
      }
    }

    Mat dl1out(T, 2 * h);
    lstm_dir_backward(params.layer2.fwd, tr.l2.input, tr.l2.fwd, dl2out, 0,
                      false, g.layer2.fwd, dl1out);
    lstm_dir_backward(params.layer2.bwd, tr.l2.input, tr.l2.bwd, dl2out, h,
                      true, g.layer2.bwd, dl1out);

    if (tr.l1.drop_mask.size() > 0) {
      for (std::size_t i = 0; i < dl1out.v.size(); ++i) {
        dl1out.v[i] *= tr.l1.drop_mask.v[i];
      }
    }

    Mat dinput(T, d_e + d_f);
    lstm_dir_backward(params.layer1.fwd, tr.l1.input, tr.l1.fwd, dl1out, 0,
                      false, g.layer1.fwd, dinput);
    lstm_dir_backward(params.layer1.bwd, tr.l1.input, tr.l1.bwd, dl1out, h,
                      true, g.layer1.bwd, dinput);

    for (std::size_t t = 0; t < T; ++t) {
      kernels::axpy(1.0, dinput.row(t),
                    g.embedding.row(static_cast<std::size_t>(ids[t])), d_e);
      if (d_f > 0) {
        kernels::axpy(
            1.0, dinput.row(t) + d_e,
            g.feat_embedding.row(static_cast<std::size_t>(*feature_id)), d_f);
      }
    }
  }

  // L2 gradient: 2 lambda w over shared weights and the active head.
  if (l2_lambda != 0.0) {
    auto refs = param_refs(const_cast<ModelParams&>(params));
    auto grefs = param_refs(g);
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (!l2_covers(refs[i], head)) continue;
      kernels::axpy(2.0 * l2_lambda, refs[i].data, grefs[i].data,
                    refs[i].size);
    }
  }

  bd.l2 = l2_term(params, head, l2_lambda);
  bd.total = bd.ce_coarse + bd.ce_fine + bd.l2;
  if (breakdown) *breakdown = bd;
  return g;
}

Model make_model(const Hyperparams& hyper, Vocab vocab) {
  if (auto err = validate_hyper(hyper); !err.empty()) fail(err);
  Model m;
  m.hyper = hyper;
  m.vocab = std::move(vocab);
  Rng rng(derive_seed(hyper.seed, {kInitSalt}));
  m.params = init_params(hyper, m.vocab.size(), rng);
  return m;
}

namespace {

// Shuffled cyclic stream over one dataset; reshuffles whenever the cursor
// wraps, so every example appears once per cycle.
class BatchCycle {
 public:
  BatchCycle(const corpus::Dataset* ds, Rng* rng) : ds_(ds), rng_(rng) {
    order_.resize(ds->examples.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    rng_->shuffle(order_);
  }

  Batch next(std::size_t n) {
    Batch batch;
    batch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (pos_ == order_.size()) {
        rng_->shuffle(order_);
        pos_ = 0;
      }
      batch.push_back(&ds_->examples[order_[pos_++]]);
    }
    return batch;
  }

 private:
  const corpus::Dataset* ds_;
  Rng* rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<EpochLog> train(Model& model, const corpus::Dataset& cg,
                            const corpus::Dataset& fg) {
  const Hyperparams& hy = model.hyper;
  if (auto err = validate_hyper(hy); !err.empty()) fail(err);
  const double wsum = hy.sample_weight_cg + hy.sample_weight_fg;
  const double p_cg = hy.sample_weight_cg / wsum;
  const bool use_cg = hy.sample_weight_cg > 0;
  const bool use_fg = hy.sample_weight_fg > 0;
  if (use_cg && cg.examples.empty()) {
    fail("coarse sampling weight is positive but the coarse dataset is empty");
  }
  if (use_fg && fg.examples.empty()) {
    fail("fine sampling weight is positive but the fine dataset is empty");
  }

  Rng rng(derive_seed(hy.seed, {kTrainSalt}));
  std::optional<BatchCycle> cg_cycle;
  std::optional<BatchCycle> fg_cycle;
  if (use_cg) cg_cycle.emplace(&cg, &rng);
  if (use_fg) fg_cycle.emplace(&fg, &rng);

  const std::size_t total = (use_cg ? cg.examples.size() : 0) +
                            (use_fg ? fg.examples.size() : 0);
  const std::size_t batch_size = static_cast<std::size_t>(hy.batch_size);
  const std::size_t iters_per_epoch = (total + batch_size - 1) / batch_size;

  ModelParams velocity = zeros_like_params(model.params);
  auto prefs = param_refs(model.params);
  auto vrefs = param_refs(velocity);

  std::vector<EpochLog> logs;
  double lr = hy.lr0;
  for (int epoch = 1; epoch <= hy.epochs; ++epoch) {
    EpochLog elog;
    elog.epoch = epoch;
    elog.lr = lr;
    double sum_cg = 0.0;
    double sum_fg = 0.0;
    for (std::size_t iter = 0; iter < iters_per_epoch; ++iter) {
      corpus::Kind head;
      if (use_cg && use_fg) {
        head = rng.uniform() < p_cg ? corpus::Kind::CG : corpus::Kind::FG;
      } else {
        head = use_cg ? corpus::Kind::CG : corpus::Kind::FG;
      }
      Batch batch = head == corpus::Kind::CG ? cg_cycle->next(batch_size)
                                             : fg_cycle->next(batch_size);
      LossBreakdown bd;
      ModelParams g =
          grad(model, batch, head, hy.l2_lambda, &bd, true, &rng);
      if (!std::isfinite(bd.total)) {
        fail("non-finite loss at epoch ", epoch, " iteration ", iter + 1,
             " (", bd.total, "); aborting training");
      }
      if (head == corpus::Kind::CG) {
        sum_cg += bd.total;
        ++elog.batches_cg;
      } else {
        sum_fg += bd.total;
        ++elog.batches_fg;
      }

      auto grefs = param_refs(g);
      double norm_sq = 0.0;
      for (const auto& r : grefs) norm_sq += kernels::sumsq(r.data, r.size);
      const double norm = std::sqrt(norm_sq);
      if (norm > 5.0) {
        const double s = 5.0 / norm;
        for (auto& r : grefs) kernels::scale(s, r.data, r.size);
        ++elog.clipped;
      }

      const bool active_coarse = head == corpus::Kind::CG;
      for (std::size_t i = 0; i < prefs.size(); ++i) {
        const auto& ref = prefs[i];
        if (ref.scope == Scope::CoarseHead && !active_coarse) continue;
        if (ref.scope == Scope::FineHead && active_coarse) continue;
        double* w = ref.data;
        double* v = vrefs[i].data;
        const double* gd = grefs[i].data;
        for (std::size_t k = 0; k < ref.size; ++k) {
          v[k] = hy.momentum * v[k] - lr * gd[k];
          w[k] += v[k];
        }
      }
    }
    elog.mean_loss_cg =
        elog.batches_cg ? sum_cg / static_cast<double>(elog.batches_cg) : 0.0;
    elog.mean_loss_fg =
        elog.batches_fg ? sum_fg / static_cast<double>(elog.batches_fg) : 0.0;
    log::info(cat("epoch ", epoch, " lr ", lr, " cg_loss ", elog.mean_loss_cg,
                  " (", elog.batches_cg, " batches) fg_loss ",
                  elog.mean_loss_fg, " (", elog.batches_fg, " batches) clipped ",
                  elog.clipped));
    logs.push_back(elog);
    lr *= hy.lr_decay;
  }
  return logs;
}

std::vector<int> predict(const ModelParams& params,
                         const std::vector<int>& token_ids,
                         std::optional<int> feature_id, corpus::Kind head) {
  auto tr = forward(params, token_ids, feature_id, head);
  std::vector<int> out(token_ids.size(), 0);
  for (std::size_t t = 0; t < tr.probs.rows; ++t) {
    const double* row = tr.probs.row(t);
    std::size_t best = 0;
    for (std::size_t l = 1; l < tr.probs.cols; ++l) {
      if (row[l] > row[best]) best = l;
    }
    out[t] = static_cast<int>(best);
  }
  corpus::repair_bio(out, head);
  return out;
}

std::vector<int> predict_tags(const Model& model,
                              const std::vector<std::string>& tokens,
                              corpus::Kind head) {
  return predict(model.params, model.vocab.encode(tokens), std::nullopt, head);
}

Mat head_probs(const Model& model, const std::vector<std::string>& tokens,
               corpus::Kind head) {
  return forward(model.params, model.vocab.encode(tokens), std::nullopt, head)
      .probs;
}

void load_pretrained_vectors(const std::string& path, const Vocab& vocab,
                             Mat& embedding) {
  std::ifstream in(path);
  if (!in) fail("cannot open vector file: ", path);
  const std::size_t d_e = embedding.cols;
  std::string line;
  std::size_t lineno = 0;
  Vec mean(d_e, 0.0);
  std::size_t loaded = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    Vec values;
    double x;
    while (ss >> x) values.push_back(x);
    if (values.size() != d_e) {
      fail(path, ":", lineno, ": expected ", d_e, " values, got ",
           values.size());
    }
    auto it = vocab.token_to_id.find(token);
    if (it == vocab.token_to_id.end()) continue;
    std::copy(values.begin(), values.end(),
              embedding.row(static_cast<std::size_t>(it->second)));
    kernels::axpy(1.0, values.data(), mean.data(), d_e);
    ++loaded;
  }
  if (loaded > 0) {
    kernels::scale(1.0 / static_cast<double>(loaded), mean.data(), d_e);
    std::copy(mean.begin(), mean.end(), embedding.row(Vocab::kUnk));
  }
}

namespace {

json hyper_to_json(const Hyperparams& h) {
  return json{{"lr0", h.lr0},
              {"lr_decay", h.lr_decay},
              {"momentum", h.momentum},
              {"l2_lambda", h.l2_lambda},
              {"dropout", h.dropout},
              {"sample_weight_cg", h.sample_weight_cg},
              {"sample_weight_fg", h.sample_weight_fg},
              {"batch_size", h.batch_size},
              {"epochs", h.epochs},
              {"seed", h.seed},
              {"d_e", h.d_e},
              {"d_f", h.d_f},
              {"n_features", h.n_features},
              {"hidden", h.hidden}};
}

Hyperparams hyper_from_json(const json& j) {
  Hyperparams h;
  h.lr0 = j.at("lr0").get<double>();
  h.lr_decay = j.at("lr_decay").get<double>();
  h.momentum = j.at("momentum").get<double>();
  h.l2_lambda = j.at("l2_lambda").get<double>();
  h.dropout = j.at("dropout").get<double>();
  h.sample_weight_cg = j.at("sample_weight_cg").get<double>();
  h.sample_weight_fg = j.at("sample_weight_fg").get<double>();
  h.batch_size = j.at("batch_size").get<int>();
  h.epochs = j.at("epochs").get<int>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.d_e = j.at("d_e").get<int>();
  h.d_f = j.at("d_f").get<int>();
  h.n_features = j.at("n_features").get<int>();
  h.hidden = j.at("hidden").get<int>();
  return h;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  json j;
  j["version"] = 1;
  j["hyper"] = hyper_to_json(model.hyper);
  j["vocab"] = model.vocab.id_to_token;
  j["vocab_min_count"] = model.vocab.min_count;
  json arrays = json::object();
  auto& mut = const_cast<ModelParams&>(model.params);
  for (const auto& r : param_refs(mut)) {
    json values = json::array();
    for (std::size_t i = 0; i < r.size; ++i) values.push_back(r.data[i]);
    arrays[r.name] = json{{"shape", r.shape}, {"values", std::move(values)}};
  }
  j["arrays"] = std::move(arrays);
  std::ofstream out(path);
  if (!out) fail("cannot write checkpoint: ", path);
  out << j.dump() << "\n";
  if (!out) fail("write failed: ", path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open checkpoint: ", path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(path, ": invalid JSON: ", e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1) {
    fail(path, ": unsupported checkpoint version");
  }
  Model m;
  m.hyper = hyper_from_json(j.at("hyper"));
  if (auto err = validate_hyper(m.hyper); !err.empty()) {
    fail(path, ": bad hyperparameters: ", err);
  }
  m.vocab.min_count = j.value("vocab_min_count", 1);
  m.vocab.id_to_token = j.at("vocab").get<std::vector<std::string>>();
  if (m.vocab.id_to_token.size() < 2 ||
      m.vocab.id_to_token[0] != kPadToken ||
      m.vocab.id_to_token[1] != kUnkToken) {
    fail(path, ": vocab must start with the reserved tokens");
  }
  for (std::size_t i = 0; i < m.vocab.id_to_token.size(); ++i) {
    m.vocab.token_to_id[m.vocab.id_to_token[i]] = static_cast<int>(i);
  }
  m.params = shaped_params(m.hyper, m.vocab.size());
  const json& arrays = j.at("arrays");
  std::size_t seen = 0;
  for (auto& r : param_refs(m.params)) {
    if (!arrays.contains(r.name)) fail(path, ": missing array ", r.name);
    const json& a = arrays.at(r.name);
    auto shape = a.at("shape").get<std::vector<std::size_t>>();
    if (shape != r.shape) fail(path, ": array ", r.name, " has wrong shape");
    const json& values = a.at("values");
    if (values.size() != r.size) {
      fail(path, ": array ", r.name, " has ", values.size(), " values, want ",
           r.size);
    }
    for (std::size_t i = 0; i < r.size; ++i) {
      if (!values[i].is_number()) {
        fail(path, ": array ", r.name, " has a non-numeric value");
      }
      r.data[i] = values[i].get<double>();
    }
    ++seen;
  }
  if (arrays.size() != seen) {
    fail(path, ": checkpoint contains unknown arrays");
  }
  return m;
}

}  // namespace engagetag::tagger
