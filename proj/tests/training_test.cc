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

#include <cmath>

#include "doctest.h"
#include "support/fixtures.h"

namespace ctrack {
namespace {

FeatureLayout Layout8() {
  FeatureLayout layout = testing::TinyLayout();
  layout.capacity = 8;
  return layout;
}

ModelConfig SmallModel(const FeatureLayout &layout) {
  ModelConfig config;
  config.layout = layout;
  config.d_model = 6;
  config.num_heads = 2;
  config.ffn_dim = 8;
  config.head_hidden = 8;
  return config;
}

TEST_SUITE("training") {

TEST_CASE("hinge loss") {
  CHECK(HingeLoss(0.0, 1.0) == 1.0);
  CHECK(HingeLoss(2.0, 1.0) == 0.0);
  CHECK(HingeLoss(0.25, -1.0) == 1.25);
  CHECK(HingeLossGrad(0.5, 1.0) == -1.0);
  CHECK(HingeLossGrad(-0.5, -1.0) == 1.0);
  CHECK(HingeLossGrad(1.5, 1.0) == 0.0);
  CHECK(CombinedLoss(2.0, 3.0, 6.0) == 15.0);

  const Matrix logits = (Matrix(2, 2) << 0.5, -2.0, 3.0, 0.0).finished();
  const Matrix labels = (Matrix(2, 2) << 1.0, -1.0, -1.0, 1.0).finished();
  const Matrix mask = (Matrix(2, 2) << 1.0, 1.0, 0.0, 1.0).finished();
  Matrix grad;
  CHECK(MaskedHingeLoss(logits, labels, &mask, &grad) == 1.5);
  CHECK(grad == (Matrix(2, 2) << -1.0, 0.0, 0.0, -1.0).finished());
  CHECK(MaskedHingeLoss(logits, labels, nullptr) == 5.5);
  const Matrix wrong = Matrix::Zero(3, 2);
  CHECK_THROWS(MaskedHingeLoss(logits, wrong, nullptr));
}

TEST_CASE("labels and masks of a teacher-forced turn") {
  const FeatureLayout layout = Layout8();
  testing::TestPipeline pipeline(layout);
  const Conversation c = testing::VacationConversation();
  const TrainingExample ex = BuildExample(c, 1, pipeline.encoder(), 0);
  const int K = 8, P = 7, m = 12;
  REQUIRE(ex.features.m == m);
  CHECK(ex.stage1_labels.rows() == m);

  // Only "they" is new and it is a single-token span.
  CHECK(ex.stage1_labels(0, 0) == 1.0);
  CHECK((ex.stage1_labels.array() > 0).count() == 1);

  // ID labels.
  CHECK(ex.stage2_labels(0, 5) == 1.0);
  CHECK(ex.stage2_labels(3, 4) == 1.0);
  CHECK(ex.stage2_labels(5, 3) == 1.0);
  CHECK((ex.stage2_labels.leftCols(K).array() > 0).count() == 3);
  CHECK(ex.stage2_mask.leftCols(K).isOnes());

  // Properties on referring tokens only.
  for (int i = 0; i < m; ++i) {
    const bool refers = i == 0 || i == 3 || i == 5;
    CHECK(ex.stage2_mask.block(i, K, 1, P).isOnes() == refers);
    CHECK((ex.stage2_mask.block(i, K, 1, P).array() == 0).all() == !refers);
  }
  // they: person, unknown gender, plural.
  CHECK(ex.stage2_labels(0, K + kTypeOffset) == 1.0);
  CHECK(ex.stage2_labels(0, K + kGenderOffset + 2) == 1.0);
  CHECK(ex.stage2_labels(0, K + kNumberOffset + 1) == 1.0);
  // pops: male, singular.
  CHECK(ex.stage2_labels(5, K + kGenderOffset + 1) == 1.0);
  CHECK(ex.stage2_labels(5, K + kNumberOffset) == 1.0);

  // Membership only for the plural reference.
  CHECK((ex.stage2_mask.rightCols(K).array() > 0).count() == K);
  CHECK(ex.stage2_mask.block(0, K + P, 1, K).isOnes());
  CHECK(ex.stage2_labels(0, K + P + 2) == 1.0);
  CHECK(ex.stage2_labels(0, K + P + 3) == 1.0);
  CHECK((ex.stage2_labels.rightCols(K).array() > 0).count() == 2);

  // Stage-2 rows carry the fresh ID one-hot of "they".
  const int n = ex.features.n;
  const int base = layout.total_dim();
  CHECK(ex.stage2_rows.cols() == layout.stage2_input_dim());
  CHECK(ex.stage2_rows(n + 0, base + 5) == 1.0);
  CHECK(ex.stage2_rows.block(n + 1, base, m - 1, K + 1).isZero());

  CHECK_THROWS_AS(BuildExample(c, 2, pipeline.encoder(), 0),
                  std::out_of_range);
}

TEST_CASE("randomized examples shift every ID") {
  const FeatureLayout layout = Layout8();
  testing::TestPipeline pipeline(layout);
  const Conversation c = testing::VacationConversation();
  const TrainingExample ex = BuildExample(c, 1, pipeline.encoder(), 3);
  CHECK(ex.id_offset == 3);
  CHECK(ex.stage2_labels(0, 0) == 1.0);  // 5 + 3 mod 8
  CHECK(ex.stage2_labels(3, 7) == 1.0);
  CHECK(ex.stage2_labels(5, 6) == 1.0);
  CHECK(ex.stage2_labels(0, 8 + 7 + 5) == 1.0);
  CHECK(ex.stage2_labels(0, 8 + 7 + 6) == 1.0);
}

TEST_CASE("example loss is normalized by turn length") {
  const FeatureLayout layout = Layout8();
  testing::TestPipeline pipeline(layout);
  const ModelParams p = ModelParams::Initialize(SmallModel(layout), 3);
  const TrainingExample ex =
      BuildExample(testing::VacationConversation(), 0, pipeline.encoder(), 0);
  ModelParams grads = p.ZerosLike();
  const LossParts parts = ExampleLoss(p, ex, 6.0, &grads);
  CHECK(parts.total == doctest::Approx(6.0 * parts.stage1 + parts.stage2));

  Matrix logits1 = Stage1Forward(p, ex.features);
  const double l1 =
      MaskedHingeLoss(logits1, ex.stage1_labels, nullptr) / ex.features.m;
  CHECK(parts.stage1 == doctest::Approx(l1).epsilon(1e-12));

  ModelParams doubled = p.ZerosLike();
  ExampleLoss(p, ex, 6.0, &doubled, 2.0);
  for (size_t i = 0; i < grads.Tensors().size(); ++i) {
    CHECK((*doubled.Tensors()[i] - 2.0 * *grads.Tensors()[i]).norm() < 1e-12);
  }
}

TEST_CASE("adam's first step moves each parameter by the learning rate") {
  const FeatureLayout layout = Layout8();
  ModelParams p = ModelParams::Initialize(SmallModel(layout), 3);
  const ModelParams before = p;
  ModelParams g = p.ZerosLike();
  g.stage1[StageParams::kInputB](0, 0) = 0.3;
  g.stage1[StageParams::kInputB](0, 1) = -2.0;
  AdamOptimizer adam(p, 0.01, 0.9, 0.999, 1e-8);
  adam.Step(p, g);
  CHECK(adam.steps() == 1);
  CHECK(p.stage1[StageParams::kInputB](0, 0) ==
        doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(p.stage1[StageParams::kInputB](0, 1) ==
        doctest::Approx(0.01).epsilon(1e-6));
  CHECK(p.stage1[StageParams::kInputB](0, 2) == 0.0);
  CHECK(p.stage2[StageParams::kInputW] == before.stage2[StageParams::kInputW]);

  // Second step with the same gradient: m = g, v = g^2 after correction.
  adam.Step(p, g);
  CHECK(p.stage1[StageParams::kInputB](0, 0) ==
        doctest::Approx(-0.02).epsilon(1e-6));
}

TEST_CASE("epoch log lines") {
  EpochLog log;
  log.epoch = 3;
  log.loss = 1.5;
  log.stage1 = 0.25;
  log.stage2 = 0.0;
  log.wall_ms = 12.5;
  log.learning_rate = 1e-4;
  CHECK(FormatEpochLog(log) ==
        R"({"epoch":3,"L":1.5,"L1":0.25,"L2":0.0,"wall_ms":12.5,"lr":0.0001})");
  log.holdout_loss = 2.0;
  CHECK(FormatEpochLog(log).find(R"("holdout_L":2.0)") != std::string::npos);
}

TEST_CASE("training configuration is validated") {
  TrainConfig c;
  CHECK_NOTHROW(c.Validate());
  c.batch_size = 0;
  CHECK_THROWS(c.Validate());
  c = TrainConfig();
  c.learning_rate = -1.0;
  CHECK_THROWS(c.Validate());
  c = TrainConfig();
  c.jobs = 0;
  CHECK_THROWS(c.Validate());
}

struct TrainSetup {
  FeatureLayout layout = Layout8();
  testing::TestPipeline pipeline{layout};
  std::vector<Conversation> corpus = testing::GenerateCorpus(4, 11);
  ModelParams initial = ModelParams::Initialize(SmallModel(layout), 5);
  TrainConfig config;
  TrainSetup() {
    config.epochs = 3;
    config.batch_size = 4;
    config.learning_rate = 1e-3;
    config.patience = 0;
  }
};

TEST_CASE("training is reproducible for a fixed seed and job count") {
  TrainSetup s;
  for (int jobs : {1, 2}) {
    s.config.jobs = jobs;
    const TrainResult a = Train(s.corpus, s.config, s.pipeline.encoder(),
                                s.initial);
    const TrainResult b = Train(s.corpus, s.config, s.pipeline.encoder(),
                                s.initial);
    REQUIRE(a.log.size() == 3);
    CHECK_FALSE(a.diverged);
    for (size_t i = 0; i < a.params.Tensors().size(); ++i) {
      CHECK(*a.params.Tensors()[i] == *b.params.Tensors()[i]);
    }
    CHECK_FALSE(*a.params.Tensors()[0] == *s.initial.Tensors()[0]);
    for (size_t e = 0; e < a.log.size(); ++e) {
      CHECK(a.log[e].epoch == static_cast<int>(e) + 1);
      CHECK(a.log[e].loss == b.log[e].loss);
    }
  }
  // Job counts only reorder floating point sums.
  s.config.jobs = 1;
  const TrainResult one = Train(s.corpus, s.config, s.pipeline.encoder(),
                                s.initial);
  s.config.jobs = 2;
  const TrainResult two = Train(s.corpus, s.config, s.pipeline.encoder(),
                                s.initial);
  CHECK(two.log.back().loss ==
        doctest::Approx(one.log.back().loss).epsilon(1e-9));
}

TEST_CASE("training reduces the loss and reports callbacks") {
  TrainSetup s;
  s.config.epochs = 20;
  s.config.learning_rate = 1e-2;
  int epochs_seen = 0;
  std::vector<int> checkpoints;
  TrainCallbacks callbacks;
  callbacks.on_epoch = [&](const EpochLog &) { ++epochs_seen; };
  callbacks.on_checkpoint = [&](int epoch, const ModelParams &) {
    checkpoints.push_back(epoch);
  };
  callbacks.checkpoint_every = 5;
  const LossParts before =
      MeanLoss(s.corpus, s.initial, s.pipeline.encoder(), s.config.alpha);
  const TrainResult r = Train(s.corpus, s.config, s.pipeline.encoder(),
                              s.initial, callbacks);
  const LossParts after =
      MeanLoss(s.corpus, r.params, s.pipeline.encoder(), s.config.alpha);
  CHECK(after.total < 0.8 * before.total);
  CHECK(epochs_seen == 20);
  CHECK(checkpoints == std::vector<int>{5, 10, 15, 20});
}

TEST_CASE("early stopping keeps the best held-out parameters") {
  TrainSetup s;
  s.corpus = testing::GenerateCorpus(10, 12);
  s.config.epochs = 200;
  s.config.learning_rate = 0.05;
  s.config.patience = 2;
  s.config.holdout_fraction = 0.3;
  const TrainResult r = Train(s.corpus, s.config, s.pipeline.encoder(),
                              s.initial);
  REQUIRE(r.stopped_early);
  CHECK(static_cast<int>(r.log.size()) == r.best_epoch + 2);
  double best = r.log[r.best_epoch - 1].holdout_loss.value();
  for (const EpochLog &log : r.log) {
    CHECK(log.holdout_loss.value() >= best);
  }
}

TEST_CASE("divergence is reported") {
  TrainSetup s;
  s.config.learning_rate = 1e300;
  s.config.epochs = 5;
  const TrainResult r = Train(s.corpus, s.config, s.pipeline.encoder(),
                              s.initial);
  CHECK(r.diverged);
  CHECK(r.log.size() < 5);
}

}  // TEST_SUITE

}  // namespace
}  // namespace ctrack
