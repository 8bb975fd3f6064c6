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

#include "ctrack/encoding.h"

namespace ctrack {

void FeatureLayout::Validate() const {
  if (capacity < 2 || num_properties < 1 || history < 1 || num_lexicons < 1 ||
      context_free_dim < 1 || contextual_dim < 1) {
    throw std::invalid_argument("feature layout dimensions must be positive "
                                "(and capacity at least 2)");
  }
  if (num_properties != kNumPropertyValues) {
    throw std::invalid_argument("property block must have " +
                                std::to_string(kNumPropertyValues) +
                                " values");
  }
}

SequenceTooLongError::SequenceTooLongError(int n, int m, int limit)
    : std::runtime_error("sequence pair too long: " + std::to_string(n) +
                         " repository rows + " + std::to_string(m) +
                         " tokens > " + std::to_string(limit)) {}

FeatureEncoder::FeatureEncoder(FeatureLayout layout,
                               EncoderResources resources)
    : layout_(layout), resources_(std::move(resources)) {
  layout_.Validate();
  if (static_cast<int>(resources_.lexicons.size()) != layout_.num_lexicons) {
    throw std::invalid_argument("expected " +
                                std::to_string(layout_.num_lexicons) +
                                " lexicons");
  }
  if (resources_.context_free != nullptr &&
      resources_.context_free->dim() != layout_.context_free_dim) {
    throw std::invalid_argument("context-free embedder dim mismatch");
  }
  if (resources_.contextual != nullptr &&
      resources_.contextual->dim() != layout_.contextual_dim) {
    throw std::invalid_argument("contextual embedder dim mismatch");
  }
}

std::vector<Vector> FeatureEncoder::Contextual(
    const Repository &repo, const std::vector<std::string> &tokens) const {
  if (resources_.contextual == nullptr) {
    return std::vector<Vector>(repo.size() + tokens.size(),
                               Vector::Zero(layout_.contextual_dim));
  }
  std::vector<std::vector<std::string>> texts;
  texts.reserve(repo.size());
  for (const EntityReference &ref : repo.refs()) texts.push_back(ref.span_text);
  std::vector<Vector> out = resources_.contextual->Embed(texts, tokens);
  if (out.size() != repo.size() + tokens.size()) {
    throw std::runtime_error("contextual embedder returned " +
                             std::to_string(out.size()) + " vectors");
  }
  return out;
}

void FeatureEncoder::SetSignals(const std::string &token,
                                Eigen::Ref<Eigen::VectorXd> row) const {
  for (int i = 0; i < layout_.num_lexicons; ++i) {
    const Lexicon *lexicon = resources_.lexicons[i];
    row[layout_.signals_offset() + i] =
        lexicon != nullptr && lexicon->Contains(token) ? 1.0 : 0.0;
  }
}

Eigen::VectorXd FeatureEncoder::EncodeReference(const EntityReference &ref,
                                                int turn_index,
                                                const std::string &sender,
                                                const Vector &contextual) const {
  const FeatureLayout &l = layout_;
  if (ref.entity_id < 0 || ref.entity_id >= l.capacity) {
    throw std::out_of_range("entity ID " + std::to_string(ref.entity_id) +
                            " outside capacity " + std::to_string(l.capacity));
  }
  Eigen::VectorXd row = Eigen::VectorXd::Zero(l.total_dim());
  row[l.id_offset() + ref.entity_id] = 1.0;
  row[l.meta_offset()] = ref.is_new ? 1.0 : 0.0;
  for (int bit : ref.props.ActiveBits()) row[l.properties_offset() + bit] = 1.0;
  for (int member : ref.members) {
    if (member < 0 || member >= l.capacity) {
      throw std::out_of_range("member ID " + std::to_string(member) +
                              " outside capacity");
    }
    row[l.membership_offset() + member] = 1.0;
  }

  if (ref.role != ParticipantRole::kNone) {
    bool is_sender = ref.role == ParticipantRole::kSender;
    if (!sender.empty() && !ref.span_text.empty()) {
      is_sender = ref.span_text.front() == sender;
    }
    row[l.context_offset() + (is_sender ? 0 : 1)] = 1.0;
  }
  if (ref.turn_index >= 0) {
    const int age = turn_index - 1 - ref.turn_index;
    if (age >= 0 && age < l.history) row[l.context_offset() + 2 + age] = 1.0;
  }

  row[l.type_offset()] = 1.0;
  if (!ref.span_text.empty()) {
    SetSignals(ref.span_text.front(), row);
  }

  if (ref.mention_embedding.size() == l.context_free_dim) {
    row.segment(l.context_free_offset(), l.context_free_dim) =
        ref.mention_embedding;
  } else if (resources_.context_free != nullptr) {
    row.segment(l.context_free_offset(), l.context_free_dim) =
        resources_.context_free->Mean(ref.span_text);
  }
  if (contextual.size() == l.contextual_dim) {
    row.segment(l.contextual_offset(), l.contextual_dim) = contextual;
  }
  return row;
}

Matrix FeatureEncoder::EncodeRepository(const Repository &repo,
                                        const std::vector<std::string> &tokens,
                                        int turn_index,
                                        const std::string &sender) const {
  const std::vector<Vector> contextual = Contextual(repo, tokens);
  Matrix rows(static_cast<long>(repo.size()), layout_.total_dim());
  for (size_t i = 0; i < repo.size(); ++i) {
    rows.row(static_cast<long>(i)) =
        EncodeReference(repo.refs()[i], turn_index, sender, contextual[i])
            .transpose();
  }
  return rows;
}

Matrix FeatureEncoder::EncodeUtterance(
    const Repository &repo, const std::vector<std::string> &tokens) const {
  return TokenRows(tokens, Contextual(repo, tokens), repo.size());
}

Matrix FeatureEncoder::TokenRows(const std::vector<std::string> &tokens,
                                 const std::vector<Vector> &contextual,
                                 size_t first) const {
  if (tokens.empty()) {
    throw std::invalid_argument("cannot encode an empty utterance");
  }
  const FeatureLayout &l = layout_;
  Matrix rows = Matrix::Zero(static_cast<long>(tokens.size()), l.total_dim());
  for (size_t i = 0; i < tokens.size(); ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(l.total_dim());
    SetSignals(tokens[i], row);
    if (resources_.context_free != nullptr) {
      row.segment(l.context_free_offset(), l.context_free_dim) =
          resources_.context_free->Embed(tokens[i]);
    }
    row.segment(l.contextual_offset(), l.contextual_dim) =
        contextual[first + i];
    rows.row(static_cast<long>(i)) = row.transpose();
  }
  return rows;
}

FeatureMatrix FeatureEncoder::Encode(const Repository &repo, const Turn &turn,
                                     int turn_index,
                                     const EncodeOptions &options,
                                     Repository *encoded_repo) const {
  const int m = static_cast<int>(turn.tokens.size());
  Repository fitted = repo;
  int evicted = 0;
  while (static_cast<int>(fitted.size()) + m > options.max_length) {
    if (!options.lenient) {
      throw SequenceTooLongError(static_cast<int>(fitted.size()), m,
                                 options.max_length);
    }
    size_t victim = fitted.size();
    for (size_t i = 0; i < fitted.size(); ++i) {
      if (fitted.refs()[i].role == ParticipantRole::kNone) {
        victim = i;
        break;
      }
    }
    if (victim == fitted.size()) {
      throw SequenceTooLongError(static_cast<int>(fitted.size()), m,
                                 options.max_length);
    }
    fitted = fitted.WithoutReference(victim);
    ++evicted;
  }

  FeatureMatrix out;
  out.n = static_cast<int>(fitted.size());
  out.m = m;
  out.evicted = evicted;
  const std::vector<Vector> contextual = Contextual(fitted, turn.tokens);
  Matrix repo_rows(out.n, layout_.total_dim());
  for (int i = 0; i < out.n; ++i) {
    repo_rows.row(i) = EncodeReference(fitted.refs()[i], turn_index,
                                       turn.sender, contextual[i])
                           .transpose();
  }
  Matrix token_rows = TokenRows(turn.tokens, contextual, fitted.size());
  out.rows.resize(out.n + out.m, layout_.total_dim());
  out.rows.topRows(out.n) = repo_rows;
  out.rows.bottomRows(out.m) = token_rows;
  if (encoded_repo != nullptr) *encoded_repo = std::move(fitted);
  return out;
}

Matrix AugmentForStage2(const FeatureMatrix &features,
                        const std::vector<int> &token_ids,
                        const FeatureLayout &layout) {
  if (static_cast<int>(token_ids.size()) != features.m) {
    throw std::invalid_argument("stage-1 decisions must cover every token");
  }
  const int extra = layout.capacity + 1;
  Matrix out = Matrix::Zero(features.rows.rows(), features.rows.cols() + extra);
  out.leftCols(features.rows.cols()) = features.rows;
  for (int i = 0; i < features.m; ++i) {
    const int id = token_ids[i];
    if (id < 0) continue;
    if (id >= layout.capacity) {
      throw std::out_of_range("fresh ID outside capacity");
    }
    out(features.n + i, features.rows.cols() + id) = 1.0;
    out(features.n + i, features.rows.cols() + layout.capacity) = 1.0;
  }
  return out;
}

}  // namespace ctrack
