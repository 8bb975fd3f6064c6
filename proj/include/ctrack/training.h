// Copyright 2026 The Context Tracker Authors.
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

#ifndef CTRACK_TRAINING_H_
#define CTRACK_TRAINING_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctrack/corpus.h"
#include "ctrack/encoding.h"
#include "ctrack/network.h"

namespace ctrack {

// max(0, 1 - x * y) for a label y in {-1, +1}.
double HingeLoss(double x, double y);
// Derivative of HingeLoss with respect to x (0 where the margin is met).
double HingeLossGrad(double x, double y);
// Sum of hinge terms over the entries selected by `mask` (all entries when
// null). When `grad` is non-null it receives the per-entry derivative, zero
// outside the mask.
double MaskedHingeLoss(const Matrix &logits, const Matrix &labels,
                       const Matrix *mask, Matrix *grad = nullptr);
// alpha * stage1 + stage2.
double CombinedLoss(double stage1, double stage2, double alpha);

// One teacher-forced turn. Repository rows come from the gold annotations of
// the preceding turns, token rows from the turn itself. Labels are +-1;
// masks are 0/1 and select the stage-2 terms that enter the loss.
struct TrainingExample {
  FeatureMatrix features;
  Matrix stage2_rows;     // features plus gold stage-1 decisions
  Matrix stage1_labels;   // m x 2: begin, inside of new-entity spans
  Matrix stage2_labels;   // m x (2K + P): ID | properties | membership
  Matrix stage2_mask;     // m x (2K + P)
  int id_offset = 0;
  int turn_index = 0;
};

// `id_offset` is applied with RandomizeIds before anything else.
TrainingExample BuildExample(const Conversation &conversation, int turn_index,
                             const FeatureEncoder &encoder, int id_offset,
                             const EncodeOptions &options = {});

struct LossParts {
  double stage1 = 0.0;  // L1
  double stage2 = 0.0;  // L2
  double total = 0.0;   // alpha * L1 + L2
};

// Per-example loss: masked hinge terms summed per stage and divided by the
// number of tokens. When `grads` is non-null, accumulates `grad_scale` times
// the gradient of the total.
LossParts ExampleLoss(const ModelParams &params,
                      const TrainingExample &example, double alpha,
                      ModelParams *grads = nullptr, double grad_scale = 1.0);

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 20;
  double alpha = 6.0;
  int epochs = 100;
  uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool randomize_ids = true;
  // Early stopping on a held-out shard of the training conversations;
  // disabled when patience is 0 or the shard would be empty.
  int patience = 10;
  double holdout_fraction = 0.1;
  int jobs = 1;
  EncodeOptions encode;

  void Validate() const;
};

// Adam with bias correction.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams &like, double learning_rate, double beta1,
                double beta2, double epsilon);
  void Step(ModelParams &params, const ModelParams &grads);
  int64_t steps() const { return steps_; }

 private:
  ModelParams first_;
  ModelParams second_;
  double learning_rate_, beta1_, beta2_, epsilon_;
  int64_t steps_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double stage1 = 0.0;
  double stage2 = 0.0;
  double wall_ms = 0.0;
  double learning_rate = 0.0;
  std::optional<double> holdout_loss;
};

// One structured-text line per epoch.
std::string FormatEpochLog(const EpochLog &log);

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
  bool diverged = false;
  bool stopped_early = false;
  int best_epoch = 0;
};

struct TrainCallbacks {
  std::function<void(const EpochLog &)> on_epoch;
  std::function<void(int epoch, const ModelParams &)> on_checkpoint;
  int checkpoint_every = 10;
};

// Mini-batch Adam over teacher-forced (conversation, turn) examples. Each
// epoch reshuffles the examples and draws one ID offset per conversation.
// Deterministic for a fixed seed and job count: each worker sums a fixed
// contiguous slice of the batch and slices are reduced in order.
TrainResult Train(const std::vector<Conversation> &corpus,
                  const TrainConfig &config, const FeatureEncoder &encoder,
                  ModelParams initial, const TrainCallbacks &callbacks = {});

// Mean teacher-forced loss over every turn without ID randomization.
LossParts MeanLoss(const std::vector<Conversation> &corpus,
                   const ModelParams &params, const FeatureEncoder &encoder,
                   double alpha, const EncodeOptions &options = {});

}  // namespace ctrack

#endif  // CTRACK_TRAINING_H_
