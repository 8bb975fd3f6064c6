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

#ifndef CTRACK_NETWORK_H_
#define CTRACK_NETWORK_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctrack/encoding.h"
#include "ctrack/random.h"

namespace ctrack {

// Shape of one stage: input projection, a single post-norm transformer
// encoder layer, and a one-hidden-layer output head applied to the token
// positions only.
struct StageConfig {
  int input_dim = 0;
  int d_model = 288;
  int num_heads = 9;
  int ffn_dim = 800;
  int head_hidden = 800;
  int output_dim = 2;
  bool positional_encoding = true;
  double layer_norm_eps = 1e-5;

  void Validate() const;
  int head_dim() const { return d_model / num_heads; }
  bool operator==(const StageConfig &other) const = default;
};

// Parameter tensors of one stage, in a fixed order. Biases and layer-norm
// vectors are stored as 1 x N rows.
class StageParams {
 public:
  enum Index {
    kInputW, kInputB,
    kQueryW, kQueryB, kKeyW, kKeyB, kValueW, kValueB, kOutputW, kOutputB,
    kNorm1Gain, kNorm1Bias,
    kFfn1W, kFfn1B, kFfn2W, kFfn2B,
    kNorm2Gain, kNorm2Bias,
    kHead1W, kHead1B, kHead2W, kHead2B,
    kNumTensors
  };

  StageParams() = default;
  // All tensors zero.
  explicit StageParams(const StageConfig &config);

  // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases, unit
  // layer-norm gains.
  static StageParams Initialize(const StageConfig &config, Rng &rng);

  StageParams ZerosLike() const { return StageParams(config_); }

  const StageConfig &config() const { return config_; }
  Matrix &operator[](int i) { return tensors_[i]; }
  const Matrix &operator[](int i) const { return tensors_[i]; }
  static const char *Name(int i);
  int64_t NumScalars() const;

  // this += scale * other.
  void AddScaled(const StageParams &other, double scale);
  void SetZero();
  bool AllFinite() const;

 private:
  StageConfig config_;
  std::vector<Matrix> tensors_;
};

// Intermediate values of one forward pass, kept for the backward pass.
struct StageCache {
  int n = 0;
  int m = 0;
  Matrix input;
  Matrix projected;            // H0, including positional encodings
  Matrix queries, keys, values;
  std::vector<Matrix> attention;  // per head, L x L, rows sum to one
  Matrix context;              // concatenated head outputs
  Matrix norm1_hat;            // normalized pre-gain values
  Eigen::VectorXd norm1_inv_std;
  Matrix norm1_out;
  Matrix ffn_pre;              // before the rectifier
  Matrix norm2_hat;
  Eigen::VectorXd norm2_inv_std;
  Matrix fused;                // encoder output t_1..t_{n+m}
  Matrix head_pre;             // head hidden layer before the rectifier
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteGradientError : public std::runtime_error {
 public:
  explicit NonFiniteGradientError(const std::string &parameter);
  const std::string &parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

// Sinusoidal position encodings for `length` positions.
Matrix PositionalEncoding(int length, int d_model);

// Encoder only: returns the fused rows t_1..t_{n+m}.
Matrix EncoderForward(const StageParams &params, const Matrix &rows,
                      StageCache *cache = nullptr);

// Encoder plus output head over the last `m` rows; returns m x output_dim.
Matrix StageForward(const StageParams &params, const Matrix &rows, int m,
                    StageCache *cache = nullptr);

// Accumulates into `grads` the gradient of a scalar loss whose derivative
// with respect to the stage logits is `logit_grad` (m x output_dim).
void StageBackward(const StageParams &params, const StageCache &cache,
                   const Matrix &logit_grad, StageParams *grads);

struct ModelConfig {
  FeatureLayout layout;
  int d_model = 288;
  int num_heads = 9;
  int ffn_dim = 800;
  int head_hidden = 800;
  bool positional_encoding = true;

  StageConfig Stage1() const;
  StageConfig Stage2() const;
  bool operator==(const ModelConfig &other) const = default;
};

struct ModelParams {
  ModelConfig config;
  uint64_t seed = 0;
  StageParams stage1;
  StageParams stage2;

  static ModelParams Initialize(const ModelConfig &config, uint64_t seed);
  ModelParams ZerosLike() const;
  void AddScaled(const ModelParams &other, double scale);
  void SetZero();
  // Throws NonFiniteGradientError naming the first tensor with NaN or Inf.
  void CheckFinite() const;
  int64_t NumScalars() const;

  // Flat views used by the optimizer and the gradient checker.
  std::vector<Matrix *> Tensors();
  std::vector<const Matrix *> Tensors() const;
  std::vector<std::string> TensorNames() const;
};

Matrix Stage1Forward(const ModelParams &params, const FeatureMatrix &features,
                     StageCache *cache = nullptr);
// `augmented_rows` comes from AugmentForStage2.
Matrix Stage2Forward(const ModelParams &params, const Matrix &augmented_rows,
                     int m, StageCache *cache = nullptr);

}  // namespace ctrack

#endif  // CTRACK_NETWORK_H_
