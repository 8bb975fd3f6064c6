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

#include "ctrack/network.h"

#include <cmath>

namespace ctrack {

namespace {

constexpr const char *kTensorNames[StageParams::kNumTensors] = {
    "input.w",  "input.b",  "attn.query.w", "attn.query.b", "attn.key.w",
    "attn.key.b", "attn.value.w", "attn.value.b", "attn.output.w",
    "attn.output.b", "norm1.gain", "norm1.bias", "ffn1.w", "ffn1.b",
    "ffn2.w", "ffn2.b", "norm2.gain", "norm2.bias", "head1.w", "head1.b",
    "head2.w", "head2.b"};

void AddBias(Matrix &x, const Matrix &bias) {
  x.rowwise() += bias.row(0);
}

Matrix ColumnSum(const Matrix &x) { return x.colwise().sum(); }

Matrix Relu(const Matrix &x) { return x.cwiseMax(0.0); }

Matrix ReluMask(const Matrix &pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

// Row-wise layer normalization with gain and bias.
Matrix LayerNorm(const Matrix &x, const Matrix &gain, const Matrix &bias,
                 double eps, Matrix *hat, Eigen::VectorXd *inv_std) {
  const long cols = x.cols();
  Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  Eigen::VectorXd var = centered.array().square().rowwise().sum() / cols;
  Eigen::VectorXd inv = (var.array() + eps).rsqrt();
  Matrix normalized = centered.array().colwise() * inv.array();
  Matrix out = normalized.array().rowwise() * gain.row(0).array();
  AddBias(out, bias);
  if (hat != nullptr) *hat = std::move(normalized);
  if (inv_std != nullptr) *inv_std = std::move(inv);
  return out;
}

// Gradient through layer normalization; accumulates gain/bias gradients.
Matrix LayerNormBackward(const Matrix &grad_out, const Matrix &hat,
                         const Eigen::VectorXd &inv_std, const Matrix &gain,
                         Matrix *grad_gain, Matrix *grad_bias) {
  *grad_gain += (grad_out.array() * hat.array()).colwise().sum().matrix();
  *grad_bias += ColumnSum(grad_out);
  const double cols = static_cast<double>(hat.cols());
  Matrix grad_hat = grad_out.array().rowwise() * gain.row(0).array();
  Eigen::VectorXd sum = grad_hat.rowwise().sum();
  Eigen::VectorXd dot = (grad_hat.array() * hat.array()).rowwise().sum();
  Matrix grad_in = (cols * grad_hat.array()).colwise() - sum.array();
  grad_in -= (hat.array().colwise() * dot.array()).matrix();
  grad_in = grad_in.array().colwise() * (inv_std.array() / cols);
  return grad_in;
}

Matrix GlorotUniform(int rows, int cols, Rng &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) w(i, j) = rng.Uniform(-limit, limit);
  }
  return w;
}

}  // namespace

void StageConfig::Validate() const {
  if (input_dim < 1 || d_model < 1 || num_heads < 1 || ffn_dim < 1 ||
      head_hidden < 1 || output_dim < 1) {
    throw ShapeError("stage dimensions must be positive");
  }
  if (d_model % num_heads != 0) {
    throw ShapeError("d_model " + std::to_string(d_model) +
                     " not divisible by " + std::to_string(num_heads) +
                     " heads");
  }
}

StageParams::StageParams(const StageConfig &config) : config_(config) {
  config.Validate();
  const int in = config.input_dim, d = config.d_model, f = config.ffn_dim,
            h = config.head_hidden, out = config.output_dim;
  tensors_.resize(kNumTensors);
  auto set = [&](int i, int r, int c) { tensors_[i] = Matrix::Zero(r, c); };
  set(kInputW, in, d);
  set(kInputB, 1, d);
  for (int i : {kQueryW, kKeyW, kValueW, kOutputW}) set(i, d, d);
  for (int i : {kQueryB, kKeyB, kValueB, kOutputB}) set(i, 1, d);
  set(kNorm1Gain, 1, d);
  set(kNorm1Bias, 1, d);
  set(kFfn1W, d, f);
  set(kFfn1B, 1, f);
  set(kFfn2W, f, d);
  set(kFfn2B, 1, d);
  set(kNorm2Gain, 1, d);
  set(kNorm2Bias, 1, d);
  set(kHead1W, d, h);
  set(kHead1B, 1, h);
  set(kHead2W, h, out);
  set(kHead2B, 1, out);
}

StageParams StageParams::Initialize(const StageConfig &config, Rng &rng) {
  StageParams p(config);
  for (int i : {kInputW, kQueryW, kKeyW, kValueW, kOutputW, kFfn1W, kFfn2W,
                kHead1W, kHead2W}) {
    p[i] = GlorotUniform(static_cast<int>(p[i].rows()),
                         static_cast<int>(p[i].cols()), rng);
  }
  p[kNorm1Gain].setOnes();
  p[kNorm2Gain].setOnes();
  return p;
}

const char *StageParams::Name(int i) { return kTensorNames[i]; }

int64_t StageParams::NumScalars() const {
  int64_t total = 0;
  for (const Matrix &t : tensors_) total += t.size();
  return total;
}

void StageParams::AddScaled(const StageParams &other, double scale) {
  for (int i = 0; i < kNumTensors; ++i) tensors_[i] += scale * other[i];
}

void StageParams::SetZero() {
  for (Matrix &t : tensors_) t.setZero();
}

bool StageParams::AllFinite() const {
  for (const Matrix &t : tensors_) {
    if (!t.allFinite()) return false;
  }
  return true;
}

NonFiniteGradientError::NonFiniteGradientError(const std::string &parameter)
    : std::runtime_error("non-finite gradient in parameter " + parameter),
      parameter_(parameter) {}

Matrix PositionalEncoding(int length, int d_model) {
  Matrix pe(length, d_model);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < d_model; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d_model);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return pe;
}

Matrix EncoderForward(const StageParams &p, const Matrix &rows,
                      StageCache *cache) {
  const StageConfig &c = p.config();
  if (rows.cols() != c.input_dim) {
    throw ShapeError("stage expects " + std::to_string(c.input_dim) +
                     " input columns, got " + std::to_string(rows.cols()));
  }
  const int length = static_cast<int>(rows.rows());
  const int dh = c.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix h0 = rows * p[StageParams::kInputW];
  AddBias(h0, p[StageParams::kInputB]);
  if (c.positional_encoding) h0 += PositionalEncoding(length, c.d_model);

  Matrix q = h0 * p[StageParams::kQueryW];
  AddBias(q, p[StageParams::kQueryB]);
  Matrix k = h0 * p[StageParams::kKeyW];
  AddBias(k, p[StageParams::kKeyB]);
  Matrix v = h0 * p[StageParams::kValueW];
  AddBias(v, p[StageParams::kValueB]);

  Matrix context(length, c.d_model);
  std::vector<Matrix> attention(c.num_heads);
  for (int h = 0; h < c.num_heads; ++h) {
    Matrix scores = q.middleCols(h * dh, dh) *
                    k.middleCols(h * dh, dh).transpose() * scale;
    Eigen::VectorXd row_max = scores.rowwise().maxCoeff();
    Matrix probs = (scores.colwise() - row_max).array().exp();
    Eigen::VectorXd denom = probs.rowwise().sum();
    probs = probs.array().colwise() / denom.array();
    context.middleCols(h * dh, dh) = probs * v.middleCols(h * dh, dh);
    attention[h] = std::move(probs);
  }

  Matrix attended = context * p[StageParams::kOutputW];
  AddBias(attended, p[StageParams::kOutputB]);
  Matrix norm1_hat;
  Eigen::VectorXd norm1_inv;
  Matrix a = LayerNorm(h0 + attended, p[StageParams::kNorm1Gain],
                       p[StageParams::kNorm1Bias], c.layer_norm_eps,
                       &norm1_hat, &norm1_inv);

  Matrix ffn_pre = a * p[StageParams::kFfn1W];
  AddBias(ffn_pre, p[StageParams::kFfn1B]);
  Matrix ffn = Relu(ffn_pre) * p[StageParams::kFfn2W];
  AddBias(ffn, p[StageParams::kFfn2B]);
  Matrix norm2_hat;
  Eigen::VectorXd norm2_inv;
  Matrix fused = LayerNorm(a + ffn, p[StageParams::kNorm2Gain],
                           p[StageParams::kNorm2Bias], c.layer_norm_eps,
                           &norm2_hat, &norm2_inv);

  if (cache != nullptr) {
    cache->input = rows;
    cache->projected = std::move(h0);
    cache->queries = std::move(q);
    cache->keys = std::move(k);
    cache->values = std::move(v);
    cache->attention = std::move(attention);
    cache->context = std::move(context);
    cache->norm1_hat = std::move(norm1_hat);
    cache->norm1_inv_std = std::move(norm1_inv);
    cache->norm1_out = a;
    cache->ffn_pre = std::move(ffn_pre);
    cache->norm2_hat = std::move(norm2_hat);
    cache->norm2_inv_std = std::move(norm2_inv);
    cache->fused = fused;
  }
  return fused;
}

Matrix StageForward(const StageParams &p, const Matrix &rows, int m,
                    StageCache *cache) {
  if (m < 0 || m > rows.rows()) {
    throw ShapeError("token count " + std::to_string(m) + " exceeds " +
                     std::to_string(rows.rows()) + " rows");
  }
  Matrix fused = EncoderForward(p, rows, cache);
  Matrix head_pre = fused.bottomRows(m) * p[StageParams::kHead1W];
  AddBias(head_pre, p[StageParams::kHead1B]);
  Matrix logits = Relu(head_pre) * p[StageParams::kHead2W];
  AddBias(logits, p[StageParams::kHead2B]);
  if (cache != nullptr) {
    cache->n = static_cast<int>(rows.rows()) - m;
    cache->m = m;
    cache->head_pre = std::move(head_pre);
  }
  return logits;
}

void StageBackward(const StageParams &p, const StageCache &cache,
                   const Matrix &logit_grad, StageParams *grads) {
  const StageConfig &c = p.config();
  const int length = cache.n + cache.m;
  const int dh = c.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (logit_grad.rows() != cache.m || logit_grad.cols() != c.output_dim) {
    throw ShapeError("logit gradient shape mismatch");
  }
  StageParams &g = *grads;

  // Output head.
  const Matrix head_act = Relu(cache.head_pre);
  g[StageParams::kHead2W] += head_act.transpose() * logit_grad;
  g[StageParams::kHead2B] += ColumnSum(logit_grad);
  Matrix d_head = (logit_grad * p[StageParams::kHead2W].transpose())
                      .cwiseProduct(ReluMask(cache.head_pre));
  const Matrix tokens = cache.fused.bottomRows(cache.m);
  g[StageParams::kHead1W] += tokens.transpose() * d_head;
  g[StageParams::kHead1B] += ColumnSum(d_head);
  Matrix d_fused = Matrix::Zero(length, c.d_model);
  d_fused.bottomRows(cache.m) = d_head * p[StageParams::kHead1W].transpose();

  // Second residual block.
  Matrix d_res2 = LayerNormBackward(
      d_fused, cache.norm2_hat, cache.norm2_inv_std, p[StageParams::kNorm2Gain],
      &g[StageParams::kNorm2Gain], &g[StageParams::kNorm2Bias]);
  Matrix d_a = d_res2;
  const Matrix ffn_act = Relu(cache.ffn_pre);
  g[StageParams::kFfn2W] += ffn_act.transpose() * d_res2;
  g[StageParams::kFfn2B] += ColumnSum(d_res2);
  Matrix d_ffn_pre = (d_res2 * p[StageParams::kFfn2W].transpose())
                         .cwiseProduct(ReluMask(cache.ffn_pre));
  g[StageParams::kFfn1W] += cache.norm1_out.transpose() * d_ffn_pre;
  g[StageParams::kFfn1B] += ColumnSum(d_ffn_pre);
  d_a += d_ffn_pre * p[StageParams::kFfn1W].transpose();

  // First residual block.
  Matrix d_res1 = LayerNormBackward(
      d_a, cache.norm1_hat, cache.norm1_inv_std, p[StageParams::kNorm1Gain],
      &g[StageParams::kNorm1Gain], &g[StageParams::kNorm1Bias]);
  Matrix d_h0 = d_res1;
  g[StageParams::kOutputW] += cache.context.transpose() * d_res1;
  g[StageParams::kOutputB] += ColumnSum(d_res1);
  const Matrix d_context = d_res1 * p[StageParams::kOutputW].transpose();

  Matrix d_q(length, c.d_model), d_k(length, c.d_model),
      d_v(length, c.d_model);
  for (int h = 0; h < c.num_heads; ++h) {
    const Matrix &probs = cache.attention[h];
    const auto d_ctx = d_context.middleCols(h * dh, dh);
    Matrix d_probs = d_ctx * cache.values.middleCols(h * dh, dh).transpose();
    d_v.middleCols(h * dh, dh) = probs.transpose() * d_ctx;
    Eigen::VectorXd dot = (d_probs.array() * probs.array()).rowwise().sum();
    Matrix d_scores =
        probs.array() * (d_probs.array().colwise() - dot.array());
    d_q.middleCols(h * dh, dh) =
        d_scores * cache.keys.middleCols(h * dh, dh) * scale;
    d_k.middleCols(h * dh, dh) =
        d_scores.transpose() * cache.queries.middleCols(h * dh, dh) * scale;
  }
  const Matrix &h0 = cache.projected;
  g[StageParams::kQueryW] += h0.transpose() * d_q;
  g[StageParams::kQueryB] += ColumnSum(d_q);
  g[StageParams::kKeyW] += h0.transpose() * d_k;
  g[StageParams::kKeyB] += ColumnSum(d_k);
  g[StageParams::kValueW] += h0.transpose() * d_v;
  g[StageParams::kValueB] += ColumnSum(d_v);
  d_h0 += d_q * p[StageParams::kQueryW].transpose();
  d_h0 += d_k * p[StageParams::kKeyW].transpose();
  d_h0 += d_v * p[StageParams::kValueW].transpose();

  g[StageParams::kInputW] += cache.input.transpose() * d_h0;
  g[StageParams::kInputB] += ColumnSum(d_h0);
}

StageConfig ModelConfig::Stage1() const {
  StageConfig c;
  c.input_dim = layout.total_dim();
  c.d_model = d_model;
  c.num_heads = num_heads;
  c.ffn_dim = ffn_dim;
  c.head_hidden = head_hidden;
  c.output_dim = 2;
  c.positional_encoding = positional_encoding;
  return c;
}

StageConfig ModelConfig::Stage2() const {
  StageConfig c = Stage1();
  c.input_dim = layout.stage2_input_dim();
  c.output_dim = layout.stage2_output_dim();
  return c;
}

ModelParams ModelParams::Initialize(const ModelConfig &config, uint64_t seed) {
  config.layout.Validate();
  ModelParams params;
  params.config = config;
  params.seed = seed;
  Rng rng1(MixSeed(seed, 1));
  Rng rng2(MixSeed(seed, 2));
  params.stage1 = StageParams::Initialize(config.Stage1(), rng1);
  params.stage2 = StageParams::Initialize(config.Stage2(), rng2);
  return params;
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams zeros;
  zeros.config = config;
  zeros.seed = seed;
  zeros.stage1 = stage1.ZerosLike();
  zeros.stage2 = stage2.ZerosLike();
  return zeros;
}

void ModelParams::AddScaled(const ModelParams &other, double scale) {
  stage1.AddScaled(other.stage1, scale);
  stage2.AddScaled(other.stage2, scale);
}

void ModelParams::SetZero() {
  stage1.SetZero();
  stage2.SetZero();
}

void ModelParams::CheckFinite() const {
  const auto names = TensorNames();
  const auto tensors = Tensors();
  for (size_t i = 0; i < tensors.size(); ++i) {
    if (!tensors[i]->allFinite()) throw NonFiniteGradientError(names[i]);
  }
}

int64_t ModelParams::NumScalars() const {
  return stage1.NumScalars() + stage2.NumScalars();
}

std::vector<Matrix *> ModelParams::Tensors() {
  std::vector<Matrix *> out;
  for (int i = 0; i < StageParams::kNumTensors; ++i) out.push_back(&stage1[i]);
  for (int i = 0; i < StageParams::kNumTensors; ++i) out.push_back(&stage2[i]);
  return out;
}

std::vector<const Matrix *> ModelParams::Tensors() const {
  std::vector<const Matrix *> out;
  for (int i = 0; i < StageParams::kNumTensors; ++i) out.push_back(&stage1[i]);
  for (int i = 0; i < StageParams::kNumTensors; ++i) out.push_back(&stage2[i]);
  return out;
}

std::vector<std::string> ModelParams::TensorNames() const {
  std::vector<std::string> out;
  for (int i = 0; i < StageParams::kNumTensors; ++i) {
    out.push_back(std::string("stage1.") + StageParams::Name(i));
  }
  for (int i = 0; i < StageParams::kNumTensors; ++i) {
    out.push_back(std::string("stage2.") + StageParams::Name(i));
  }
  return out;
}

Matrix Stage1Forward(const ModelParams &params, const FeatureMatrix &features,
                     StageCache *cache) {
  return StageForward(params.stage1, features.rows, features.m, cache);
}

Matrix Stage2Forward(const ModelParams &params, const Matrix &augmented_rows,
                     int m, StageCache *cache) {
  return StageForward(params.stage2, augmented_rows, m, cache);
}

}  // namespace ctrack
