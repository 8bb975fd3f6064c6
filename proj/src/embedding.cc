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

#include "ctrack/embedding.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ctrack/random.h"
#include "ctrack/types.h"

namespace ctrack {

Vector ContextFreeEmbedder::Mean(const std::vector<std::string> &tokens) const {
  Vector sum = Vector::Zero(dim());
  if (tokens.empty()) return sum;
  for (const std::string &token : tokens) sum += Embed(token);
  return sum / static_cast<double>(tokens.size());
}

Vector HashEmbedding(const std::string &token, int dim, uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("embedding dim must be >= 1");
  Rng rng(MixSeed(seed, HashBytes(token)));
  Vector v(dim);
  double norm2 = 0.0;
  // Redraw an all-zero vector.
  while (norm2 == 0.0) {
    for (int i = 0; i < dim; ++i) v[i] = rng.Uniform(-1.0, 1.0);
    norm2 = v.squaredNorm();
  }
  return v / std::sqrt(norm2);
}

HashEmbedder::HashEmbedder(int dim, uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 1) throw std::invalid_argument("embedding dim must be >= 1");
}

Vector HashEmbedder::Embed(const std::string &token) const {
  return HashEmbedding(token, dim_, seed_);
}

std::unique_ptr<TableEmbedder> TableEmbedder::LoadFile(const std::string &path,
                                                       uint64_t oov_seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file " + path);
  return LoadStream(in, oov_seed);
}

std::unique_ptr<TableEmbedder> TableEmbedder::LoadStream(std::istream &in,
                                                         uint64_t oov_seed) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("embedding file: missing header");
  }
  std::istringstream header(line);
  long count = 0;
  int dim = 0;
  if (!(header >> count >> dim) || count < 0 || dim < 1) {
    throw std::runtime_error("embedding file: bad header '" + line + "'");
  }
  std::unique_ptr<TableEmbedder> table(new TableEmbedder(dim, oov_seed));
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    Vector v(dim);
    for (int i = 0; i < dim; ++i) {
      if (!(fields >> v[i])) {
        throw std::runtime_error("embedding file line " +
                                 std::to_string(line_number) +
                                 ": expected " + std::to_string(dim) +
                                 " values");
      }
    }
    table->table_[Lowercase(token)] = std::move(v);
  }
  if (static_cast<long>(table->table_.size()) != count) {
    throw std::runtime_error("embedding file: header declares " +
                             std::to_string(count) + " vectors, found " +
                             std::to_string(table->table_.size()));
  }
  return table;
}

Vector TableEmbedder::Embed(const std::string &token) const {
  auto it = table_.find(token);
  if (it != table_.end()) return it->second;
  return oov_.Embed(token);
}

std::vector<Vector> MeanContextEmbedding(const std::vector<Vector> &elements,
                                         int window) {
  if (window < 0) throw std::invalid_argument("window must be >= 0");
  const int n = static_cast<int>(elements.size());
  std::vector<Vector> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - window);
    const int hi = std::min(n - 1, i + window);
    Vector sum = Vector::Zero(elements[i].size());
    for (int j = lo; j <= hi; ++j) sum += elements[j];
    out.push_back(sum / static_cast<double>(hi - lo + 1));
  }
  return out;
}

MeanContextEmbedder::MeanContextEmbedder(const ContextFreeEmbedder *base,
                                         int window)
    : base_(base), window_(window) {
  if (base == nullptr) throw std::invalid_argument("null base embedder");
  if (window < 0) throw std::invalid_argument("window must be >= 0");
}

std::vector<Vector> MeanContextEmbedder::Embed(
    const std::vector<std::vector<std::string>> &reference_texts,
    const std::vector<std::string> &tokens) const {
  std::vector<Vector> elements;
  elements.reserve(reference_texts.size() + tokens.size());
  for (const auto &text : reference_texts) elements.push_back(base_->Mean(text));
  for (const auto &token : tokens) elements.push_back(base_->Embed(token));
  return MeanContextEmbedding(elements, window_);
}

Lexicon::Lexicon(std::vector<std::string> words) {
  for (std::string &w : words) words_.insert(Lowercase(w));
}

Lexicon Lexicon::LoadFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (!line.empty()) words.push_back(line);
  }
  return Lexicon(std::move(words));
}

}  // namespace ctrack
