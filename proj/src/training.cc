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

#include "ctrack/training.h"

#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "ctrack/random.h"
#include "ctrack/repository.h"
#include "json.hpp"

namespace ctrack {

double HingeLoss(double x, double y) { return std::max(0.0, 1.0 - x * y); }

double HingeLossGrad(double x, double y) {
  return 1.0 - x * y > 0.0 ? -y : 0.0;
}

double MaskedHingeLoss(const Matrix &logits, const Matrix &labels,
                       const Matrix *mask, Matrix *grad) {
  if (labels.rows() != logits.rows() || labels.cols() != logits.cols() ||
      (mask != nullptr && (mask->rows() != logits.rows() ||
                           mask->cols() != logits.cols()))) {
    throw std::invalid_argument("logit, label and mask shapes differ");
  }
  if (grad != nullptr) grad->setZero(logits.rows(), logits.cols());
  double sum = 0.0;
  for (long i = 0; i < logits.rows(); ++i) {
    for (long j = 0; j < logits.cols(); ++j) {
      if (mask != nullptr && (*mask)(i, j) == 0.0) continue;
      sum += HingeLoss(logits(i, j), labels(i, j));
      if (grad != nullptr) {
        (*grad)(i, j) = HingeLossGrad(logits(i, j), labels(i, j));
      }
    }
  }
  return sum;
}

double CombinedLoss(double stage1, double stage2, double alpha) {
  return alpha * stage1 + stage2;
}

TrainingExample BuildExample(const Conversation &conversation, int turn_index,
                             const FeatureEncoder &encoder, int id_offset,
                             const EncodeOptions &options) {
  if (turn_index < 0 ||
      turn_index >= static_cast<int>(conversation.turns.size())) {
    throw std::out_of_range("turn index " + std::to_string(turn_index) +
                            " out of range for conversation " +
                            conversation.id);
  }
  const FeatureLayout &layout = encoder.layout();
  const int capacity = layout.capacity;
  const Conversation shifted =
      id_offset == 0 ? conversation
                     : RandomizeIds(conversation, id_offset, capacity);
  const Repository repo =
      Repository::FromGold(shifted, turn_index, capacity,
                           encoder.resources().context_free, id_offset);
  const Turn &turn = shifted.turns[turn_index];

  TrainingExample ex;
  ex.id_offset = id_offset;
  ex.turn_index = turn_index;
  ex.features = encoder.Encode(repo, turn, turn_index, options);
  const int m = ex.features.m;
  const int out = layout.stage2_output_dim();
  const int props = capacity;
  const int members = capacity + layout.num_properties;

  ex.stage1_labels = Matrix::Constant(m, 2, -1.0);
  ex.stage2_labels = Matrix::Constant(m, out, -1.0);
  ex.stage2_mask = Matrix::Zero(m, out);
  // ID logits are trained on every token.
  ex.stage2_mask.leftCols(capacity).setOnes();

  std::vector<int> fresh_ids(m, -1);
  for (const GoldReference &ref : turn.refs) {
    if (ref.is_new) {
      ex.stage1_labels(ref.span.start, 0) = 1.0;
      for (int i = ref.span.start + 1; i < ref.span.end; ++i) {
        ex.stage1_labels(i, 1) = 1.0;
      }
    }
    for (int i = ref.span.start; i < ref.span.end; ++i) {
      if (ref.is_new) fresh_ids[i] = ref.entity_id;
      ex.stage2_labels(i, ref.entity_id) = 1.0;
      ex.stage2_mask.block(i, props, 1, layout.num_properties).setOnes();
      for (int bit : ref.props.ActiveBits()) {
        ex.stage2_labels(i, props + bit) = 1.0;
      }
      if (ref.props.number == Number::kPlural) {
        ex.stage2_mask.block(i, members, 1, capacity).setOnes();
        for (int member : ref.members) {
          ex.stage2_labels(i, members + member) = 1.0;
        }
      }
    }
  }
  ex.stage2_rows = AugmentForStage2(ex.features, fresh_ids, layout);
  return ex;
}

LossParts ExampleLoss(const ModelParams &params,
                      const TrainingExample &example, double alpha,
                      ModelParams *grads, double grad_scale) {
  const int m = example.features.m;
  LossParts parts;
  if (m == 0) return parts;
  const double norm = 1.0 / m;

  StageCache cache1, cache2;
  const bool want_grad = grads != nullptr;
  Matrix logits1 =
      Stage1Forward(params, example.features, want_grad ? &cache1 : nullptr);
  Matrix logits2 = Stage2Forward(params, example.stage2_rows, m,
                                 want_grad ? &cache2 : nullptr);

  Matrix grad1, grad2;
  parts.stage1 = MaskedHingeLoss(logits1, example.stage1_labels, nullptr,
                                 want_grad ? &grad1 : nullptr);
  parts.stage2 = MaskedHingeLoss(logits2, example.stage2_labels,
                                 &example.stage2_mask,
                                 want_grad ? &grad2 : nullptr);
  parts.stage1 *= norm;
  parts.stage2 *= norm;
  parts.total = CombinedLoss(parts.stage1, parts.stage2, alpha);

  if (want_grad) {
    StageBackward(params.stage1, cache1, grad1 * (alpha * norm * grad_scale),
                  &grads->stage1);
    StageBackward(params.stage2, cache2, grad2 * (norm * grad_scale),
                  &grads->stage2);
  }
  return parts;
}

void TrainConfig::Validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw std::invalid_argument("holdout fraction must lie in [0, 1)");
  }
}

AdamOptimizer::AdamOptimizer(const ModelParams &like, double learning_rate,
                             double beta1, double beta2, double epsilon)
    : first_(like.ZerosLike()),
      second_(like.ZerosLike()),
      learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {}

void AdamOptimizer::Step(ModelParams &params, const ModelParams &grads) {
  ++steps_;
  const double correction1 = 1.0 - std::pow(beta1_, steps_);
  const double correction2 = 1.0 - std::pow(beta2_, steps_);
  auto p = params.Tensors();
  auto g = grads.Tensors();
  auto m = first_.Tensors();
  auto v = second_.Tensors();
  for (size_t i = 0; i < p.size(); ++i) {
    *m[i] = beta1_ * *m[i] + (1.0 - beta1_) * *g[i];
    *v[i] = beta2_ * *v[i] + (1.0 - beta2_) * g[i]->cwiseProduct(*g[i]);
    *p[i] -= (learning_rate_ *
              ((*m[i] / correction1).array() /
               ((*v[i] / correction2).array().sqrt() + epsilon_)))
                 .matrix();
  }
}

std::string FormatEpochLog(const EpochLog &log) {
  nlohmann::ordered_json j;
  j["epoch"] = log.epoch;
  j["L"] = log.loss;
  j["L1"] = log.stage1;
  j["L2"] = log.stage2;
  j["wall_ms"] = log.wall_ms;
  j["lr"] = log.learning_rate;
  if (log.holdout_loss) j["holdout_L"] = *log.holdout_loss;
  return j.dump();
}

namespace {

struct ExampleRef {
  int conversation = 0;
  int turn = 0;
};

std::vector<ExampleRef> CollectExamples(
    const std::vector<Conversation> &corpus,
    const std::vector<int> &conversations) {
  std::vector<ExampleRef> out;
  for (int c : conversations) {
    for (size_t t = 0; t < corpus[c].turns.size(); ++t) {
      if (corpus[c].turns[t].tokens.empty()) continue;
      out.push_back({c, static_cast<int>(t)});
    }
  }
  return out;
}

// Sums loss and gradient over batch[begin, end).
LossParts AccumulateSlice(const std::vector<Conversation> &corpus,
                          const std::vector<ExampleRef> &batch, size_t begin,
                          size_t end, const std::vector<int> &offsets,
                          const ModelParams &params,
                          const FeatureEncoder &encoder,
                          const TrainConfig &config, ModelParams *grads) {
  LossParts sum;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (size_t i = begin; i < end; ++i) {
    const ExampleRef &ref = batch[i];
    TrainingExample example =
        BuildExample(corpus[ref.conversation], ref.turn, encoder,
                     offsets[ref.conversation], config.encode);
    LossParts parts = ExampleLoss(params, example, config.alpha, grads, scale);
    sum.stage1 += parts.stage1;
    sum.stage2 += parts.stage2;
    sum.total += parts.total;
  }
  return sum;
}

}  // namespace

LossParts MeanLoss(const std::vector<Conversation> &corpus,
                   const ModelParams &params, const FeatureEncoder &encoder,
                   double alpha, const EncodeOptions &options) {
  LossParts mean;
  int count = 0;
  for (const Conversation &c : corpus) {
    for (size_t t = 0; t < c.turns.size(); ++t) {
      if (c.turns[t].tokens.empty()) continue;
      TrainingExample example =
          BuildExample(c, static_cast<int>(t), encoder, 0, options);
      LossParts parts = ExampleLoss(params, example, alpha);
      mean.stage1 += parts.stage1;
      mean.stage2 += parts.stage2;
      mean.total += parts.total;
      ++count;
    }
  }
  if (count > 0) {
    mean.stage1 /= count;
    mean.stage2 /= count;
    mean.total /= count;
  }
  return mean;
}

TrainResult Train(const std::vector<Conversation> &corpus,
                  const TrainConfig &config, const FeatureEncoder &encoder,
                  ModelParams initial, const TrainCallbacks &callbacks) {
  config.Validate();
  if (!(initial.config.layout == encoder.layout())) {
    throw std::invalid_argument("model and encoder layouts differ");
  }
  const int capacity = encoder.layout().capacity;

  TrainResult result;
  result.params = std::move(initial);

  // Held-out shard for early stopping.
  std::vector<int> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::vector<int> train_ids = order, holdout_ids;
  const int holdout_count =
      static_cast<int>(config.holdout_fraction * corpus.size());
  if (config.patience > 0 && holdout_count > 0 &&
      holdout_count < static_cast<int>(corpus.size())) {
    Rng split_rng(MixSeed(config.seed, 3));
    split_rng.Shuffle(order);
    holdout_ids.assign(order.begin(), order.begin() + holdout_count);
    train_ids.assign(order.begin() + holdout_count, order.end());
    std::sort(holdout_ids.begin(), holdout_ids.end());
    std::sort(train_ids.begin(), train_ids.end());
  }
  std::vector<Conversation> holdout;
  for (int id : holdout_ids) holdout.push_back(corpus[id]);

  std::vector<ExampleRef> examples = CollectExamples(corpus, train_ids);
  if (examples.empty()) return result;

  Rng rng(config.seed);
  AdamOptimizer optimizer(result.params, config.learning_rate, config.beta1,
                          config.beta2, config.epsilon);
  ModelParams last_good = result.params;
  ModelParams best = result.params;
  double best_holdout = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;
  const int jobs = std::max(1, config.jobs);
  std::vector<ModelParams> slice_grads(jobs, result.params.ZerosLike());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<int> offsets(corpus.size(), 0);
    for (size_t c = 0; c < corpus.size(); ++c) {
      offsets[c] = config.randomize_ids
                       ? static_cast<int>(rng.UniformInt(capacity))
                       : 0;
    }
    rng.Shuffle(examples);

    LossParts epoch_sum;
    bool diverged = false;
    for (size_t begin = 0; begin < examples.size() && !diverged;
         begin += config.batch_size) {
      const size_t end =
          std::min(examples.size(), begin + config.batch_size);
      const std::vector<ExampleRef> batch(examples.begin() + begin,
                                          examples.begin() + end);
      const int workers = std::min<int>(jobs, static_cast<int>(batch.size()));
      std::vector<LossParts> slice_loss(workers);
      auto run_slice = [&](int w) {
        slice_grads[w].SetZero();
        const size_t lo = batch.size() * w / workers;
        const size_t hi = batch.size() * (w + 1) / workers;
        slice_loss[w] = AccumulateSlice(corpus, batch, lo, hi, offsets,
                                        result.params, encoder, config,
                                        &slice_grads[w]);
      };
      if (workers == 1) {
        run_slice(0);
      } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < workers; ++w) threads.emplace_back(run_slice, w);
        for (std::thread &t : threads) t.join();
      }
      for (int w = 1; w < workers; ++w) {
        slice_grads[0].AddScaled(slice_grads[w], 1.0);
      }
      for (const LossParts &parts : slice_loss) {
        epoch_sum.stage1 += parts.stage1;
        epoch_sum.stage2 += parts.stage2;
        epoch_sum.total += parts.total;
      }
      if (!std::isfinite(epoch_sum.total)) {
        diverged = true;
        break;
      }
      try {
        slice_grads[0].CheckFinite();
      } catch (const NonFiniteGradientError &) {
        diverged = true;
        break;
      }
      optimizer.Step(result.params, slice_grads[0]);
    }
    if (diverged) {
      result.params = last_good;
      result.diverged = true;
      break;
    }

    EpochLog log;
    log.epoch = epoch;
    const double count = static_cast<double>(examples.size());
    log.loss = epoch_sum.total / count;
    log.stage1 = epoch_sum.stage1 / count;
    log.stage2 = epoch_sum.stage2 / count;
    log.learning_rate = config.learning_rate;
    if (!holdout.empty()) {
      log.holdout_loss = MeanLoss(holdout, result.params, encoder,
                                  config.alpha, config.encode)
                             .total;
    }
    log.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    result.log.push_back(log);
    if (callbacks.on_epoch) callbacks.on_epoch(log);
    last_good = result.params;
    if (callbacks.on_checkpoint && callbacks.checkpoint_every > 0 &&
        epoch % callbacks.checkpoint_every == 0) {
      callbacks.on_checkpoint(epoch, result.params);
    }

    if (log.holdout_loss) {
      if (*log.holdout_loss < best_holdout) {
        best_holdout = *log.holdout_loss;
        best = result.params;
        result.best_epoch = epoch;
        epochs_since_best = 0;
      } else if (++epochs_since_best >= config.patience) {
        result.params = best;
        result.stopped_early = true;
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace ctrack
