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

#ifndef ENGAGETAG_TAGGER_HPP_
#define ENGAGETAG_TAGGER_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "engagetag/corpus.hpp"
#include "engagetag/mat.hpp"
#include "engagetag/rng.hpp"

// Multi-task bidirectional LSTM sequence tagger: shared embedding, two
// stacked bidirectional recurrent layers, a linear projection, and separate
// coarse/fine softmax heads trained with source-gated updates.

namespace engagetag::tagger {

struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> id_to_token;  // dense ids, [0]=<pad>, [1]=<unk>
  std::map<std::string, int> token_to_id;
  int min_count = 1;

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id_of(const std::string& token) const;
  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  friend bool operator==(const Vocab&, const Vocab&) = default;
};

// Tokens with corpus frequency >= min_count get ids, assigned in
// (-frequency, token) order after the reserved slots; the rest map to UNK.
Vocab build_vocab(const std::vector<const corpus::Dataset*>& datasets,
                  int min_count);

struct Hyperparams {
  double lr0 = 0.9;
  double lr_decay = 0.8;       // per epoch
  double momentum = 0.9;
  double l2_lambda = 0.0005;
  double dropout = 0.25;
  double sample_weight_cg = 0.5;
  double sample_weight_fg = 0.5;
  int batch_size = 16;
  int epochs = 20;
  std::uint64_t seed = 1;
  int d_e = 16;       // token embedding width
  int d_f = 0;        // per-utterance feature embedding width, 0 = absent
  int n_features = 0; // feature inventory size, used only when d_f > 0
  int hidden = 16;    // recurrent width per direction

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

// Empty string when valid, else a message.
std::string validate_hyper(const Hyperparams& hyper);

// One direction of one recurrent layer. Gates are packed row-wise as
// [input, forget, candidate, output], each `hidden` rows.
struct LstmDir {
  Mat wx;  // 4h x in_dim
  Mat wh;  // 4h x h
  Vec b;   // 4h

  friend bool operator==(const LstmDir&, const LstmDir&) = default;
};

struct LstmLayer {
  LstmDir fwd, bwd;

  friend bool operator==(const LstmLayer&, const LstmLayer&) = default;
};

struct ModelParams {
  Mat embedding;       // V x d_e
  Mat feat_embedding;  // n_features x d_f; 0x0 when the feature is absent
  LstmLayer layer1;    // input d_e + d_f
  LstmLayer layer2;    // input 2h
  Mat proj;            // h x 2h, no bias
  Mat w_coarse;        // |coarse| x h
  Vec b_coarse;
  Mat w_fine;          // |fine| x h
  Vec b_fine;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

enum class Scope { Shared, CoarseHead, FineHead };

// Flat view over every parameter array, used by the optimizer, the L2 term,
// checkpointing, and the finite-difference tests.
struct ParamRef {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
  std::vector<std::size_t> shape;
  bool is_bias = false;
  Scope scope = Scope::Shared;
};

std::vector<ParamRef> param_refs(ModelParams& params);

ModelParams zeros_like_params(const ModelParams& params);

// Uniform(-0.1, 0.1) weights, zero biases.
ModelParams init_params(const Hyperparams& hyper, int vocab_size, Rng& rng);

struct DirTrace {
  Mat gates;      // T x 4h, post-activation [i, f, g, o]
  Mat cell;       // T x h
  Mat tanh_cell;  // T x h
  Mat hidden;     // T x h
};

struct LayerTrace {
  Mat input;      // T x in_dim
  DirTrace fwd;   // left-context states
  DirTrace bwd;   // right-context states
  Mat concat;     // T x 2h, [fwd | bwd]
  Mat drop_mask;  // T x 2h inverted-dropout multipliers; empty in eval mode
  Mat output;     // T x 2h, concat after dropout
};

struct ForwardTrace {
  LayerTrace l1;
  LayerTrace l2;
  Mat proj_out;  // T x h
  Mat logits;    // T x L
  Mat probs;     // T x L, rows sum to 1
};

// Runs the network over one utterance for the selected head. Dropout fires
// only in train mode and draws its masks from `rng` (layer 1 mask first,
// then layer 2, row-major).
ForwardTrace forward(const ModelParams& params,
                     const std::vector<int>& token_ids,
                     std::optional<int> feature_id, corpus::Kind head,
                     bool train_mode = false, Rng* rng = nullptr,
                     double dropout = 0.0);

struct LossBreakdown {
  double ce_coarse = 0.0;
  double ce_fine = 0.0;
  double l2 = 0.0;
  double total = 0.0;
};

using Batch = std::vector<const corpus::LabeledExample*>;

struct Model;

// Cross entropy summed over every token of every utterance in the batch,
// plus lambda * sum of squared weights. Exactly one CE term is active; the
// L2 sum covers shared weights and the active head, never biases and never
// the inactive head, so that the loss is differentiable consistently with
// the gated gradients. In train mode the dropout rate comes from
// model.hyper.dropout. `feature_id` (rarely used) applies to every utterance
// in the batch; the standard data path carries no features.
LossBreakdown loss(const Model& model, const Batch& batch, corpus::Kind head,
                   double l2_lambda, bool train_mode = false,
                   Rng* rng = nullptr,
                   std::optional<int> feature_id = std::nullopt);

// Backpropagation of `loss`. The inactive head's arrays come back exactly
// zero. When `breakdown` is given it receives the forward loss.
ModelParams grad(const Model& model, const Batch& batch, corpus::Kind head,
                 double l2_lambda, LossBreakdown* breakdown = nullptr,
                 bool train_mode = false, Rng* rng = nullptr,
                 std::optional<int> feature_id = std::nullopt);

struct EpochLog {
  int epoch = 0;             // 1-based
  double lr = 0.0;           // rate used during this epoch
  double mean_loss_cg = 0.0; // mean per-batch total loss, coarse iterations
  double mean_loss_fg = 0.0;
  std::size_t batches_cg = 0;
  std::size_t batches_fg = 0;
  std::size_t clipped = 0;   // iterations where the global-norm clip fired
};

struct Model {
  Hyperparams hyper;
  Vocab vocab;
  ModelParams params;

  friend bool operator==(const Model&, const Model&) = default;
};

// Fresh model with seeded initialization (seed derived from hyper.seed).
Model make_model(const Hyperparams& hyper, Vocab vocab);

// Mini-batch SGD with momentum and source-gated updates. Per iteration the
// source is sampled from the normalized weights, the next mini-batch is
// drawn from that source's shuffled cycle, and the update touches shared
// parameters plus the active head only. Gradients are clipped to global
// norm 5. The learning rate decays by hyper.lr_decay at each epoch end.
std::vector<EpochLog> train(Model& model, const corpus::Dataset& cg,
                            const corpus::Dataset& fg);

// Greedy per-token argmax (ties to the lowest tag id), then BIO repair.
std::vector<int> predict(const ModelParams& params,
                         const std::vector<int>& token_ids,
                         std::optional<int> feature_id, corpus::Kind head);

// Convenience wrappers mapping raw tokens through the model vocab.
std::vector<int> predict_tags(const Model& model,
                              const std::vector<std::string>& tokens,
                              corpus::Kind head);
Mat head_probs(const Model& model, const std::vector<std::string>& tokens,
               corpus::Kind head);

// Text vector file "token v1 v2 ... vd" per line; in-vocab rows are
// overwritten, UNK becomes the mean of the loaded rows, everything else
// keeps its current values.
void load_pretrained_vectors(const std::string& path, const Vocab& vocab,
                             Mat& embedding);

// Checkpoint: {"version": 1, "hyper": {...}, "vocab": [...],
// "arrays": {name: {"shape": [...], "values": [...]}}}. Bit-exact round trip.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace engagetag::tagger

#endif  // ENGAGETAG_TAGGER_HPP_
