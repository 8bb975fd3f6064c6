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

#ifndef CTRACK_EMBEDDING_H_
#define CTRACK_EMBEDDING_H_

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

namespace ctrack {

using Vector = Eigen::VectorXd;

// Context-free token embeddings (the word-vector role). Implementations must
// be deterministic and safe for concurrent reads after construction.
class ContextFreeEmbedder {
 public:
  virtual ~ContextFreeEmbedder() = default;
  virtual int dim() const = 0;
  virtual Vector Embed(const std::string &token) const = 0;

  // Mean of the embeddings of `tokens`; zero vector for an empty list.
  Vector Mean(const std::vector<std::string> &tokens) const;
};

// Context-dependent embeddings over the concatenation of the repository
// elements (each given by its span text) followed by the utterance tokens.
// Returns one vector per element of both sequences, repository first.
class ContextualEmbedder {
 public:
  virtual ~ContextualEmbedder() = default;
  virtual int dim() const = 0;
  virtual std::vector<Vector> Embed(
      const std::vector<std::vector<std::string>> &reference_texts,
      const std::vector<std::string> &tokens) const = 0;
};

// Deterministic pseudo-random unit vector for (token, seed).
Vector HashEmbedding(const std::string &token, int dim, uint64_t seed);

class HashEmbedder : public ContextFreeEmbedder {
 public:
  HashEmbedder(int dim, uint64_t seed);
  int dim() const override { return dim_; }
  Vector Embed(const std::string &token) const override;

 private:
  int dim_;
  uint64_t seed_;
};

// Vectors loaded from the common word-vector text format: a `<count> <dim>`
// header followed by `token v1 ... vdim` lines. Out-of-vocabulary tokens fall
// back to a hash embedding so every token gets a vector. Loading is not
// thread-safe; lookups are.
class TableEmbedder : public ContextFreeEmbedder {
 public:
  static std::unique_ptr<TableEmbedder> LoadFile(const std::string &path,
                                                 uint64_t oov_seed = 0);
  static std::unique_ptr<TableEmbedder> LoadStream(std::istream &in,
                                                   uint64_t oov_seed = 0);

  int dim() const override { return dim_; }
  Vector Embed(const std::string &token) const override;
  size_t size() const { return table_.size(); }
  bool Contains(const std::string &token) const {
    return table_.count(token) > 0;
  }

 private:
  TableEmbedder(int dim, uint64_t oov_seed) : dim_(dim), oov_(dim, oov_seed) {}

  int dim_;
  HashEmbedder oov_;
  std::unordered_map<std::string, Vector> table_;
};

// Element i gets the mean of the context-free embeddings of the elements in
// [i - window, i + window], clipped to the sequence.
std::vector<Vector> MeanContextEmbedding(const std::vector<Vector> &elements,
                                         int window);

// Default contextual provider: each element is first embedded as the mean of
// its tokens' context-free vectors, then smoothed over a +-window
// neighborhood of the combined sequence.
class MeanContextEmbedder : public ContextualEmbedder {
 public:
  MeanContextEmbedder(const ContextFreeEmbedder *base, int window);
  int dim() const override { return base_->dim(); }
  std::vector<Vector> Embed(
      const std::vector<std::vector<std::string>> &reference_texts,
      const std::vector<std::string> &tokens) const override;

 private:
  const ContextFreeEmbedder *base_;
  int window_;
};

// A word list; one lowercase token per line.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::vector<std::string> words);
  static Lexicon LoadFile(const std::string &path);

  bool Contains(const std::string &token) const {
    return words_.count(token) > 0;
  }
  size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

}  // namespace ctrack

#endif  // CTRACK_EMBEDDING_H_
