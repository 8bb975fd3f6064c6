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

#include "cli.h"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctrack/checkpoint.h"
#include "ctrack/corpus.h"
#include "ctrack/embedding.h"
#include "ctrack/encoding.h"
#include "ctrack/evaluation.h"
#include "ctrack/inference.h"
#include "ctrack/network.h"
#include "ctrack/random.h"
#include "ctrack/repository.h"
#include "ctrack/training.h"
#include "json.hpp"

#ifndef CTRACK_DEFAULT_DATA_DIR
#define CTRACK_DEFAULT_DATA_DIR "data"
#endif

namespace ctrack {

namespace {

constexpr char kLexiconFile[] = "first_names.txt";
constexpr int kDefaultContextWindow = 2;

// Checkpoint metadata keys describing the feature pipeline.
constexpr char kMetaEmbeddings[] = "embeddings";
constexpr char kMetaLexicon[] = "lexicon";
constexpr char kMetaWindow[] = "context_window";

// Raised for flag combinations CLI11 cannot express.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Embedders, lexicon and encoder for one model. Embedder seeds derive from
// the model seed so a checkpoint fully determines its features.
class Pipeline {
 public:
  Pipeline(const FeatureLayout &layout, uint64_t seed,
           const std::string &embeddings, const std::string &lexicon,
           int window)
      : context_base_(layout.contextual_dim, MixSeed(seed, 4)),
        contextual_(&context_base_, window) {
    if (embeddings.empty()) {
      word_ = std::make_unique<HashEmbedder>(layout.context_free_dim,
                                             MixSeed(seed, 3));
    } else {
      auto table = TableEmbedder::LoadFile(embeddings, MixSeed(seed, 3));
      if (table->dim() != layout.context_free_dim) {
        throw UsageError("embedding file has dimension " +
                         std::to_string(table->dim()) + ", layout expects " +
                         std::to_string(layout.context_free_dim));
      }
      word_ = std::move(table);
    }
    lexicon_ = Lexicon::LoadFile(lexicon);
    EncoderResources resources;
    resources.context_free = word_.get();
    resources.contextual = &contextual_;
    resources.lexicons = {&lexicon_};
    encoder_ = std::make_unique<FeatureEncoder>(layout, resources);
  }

  const FeatureEncoder &encoder() const { return *encoder_; }

 private:
  std::unique_ptr<ContextFreeEmbedder> word_;
  HashEmbedder context_base_;
  MeanContextEmbedder contextual_;
  Lexicon lexicon_;
  std::unique_ptr<FeatureEncoder> encoder_;
};

std::string LexiconPath(const std::string &flag) {
  return flag.empty() ? DefaultDataDir() + "/" + kLexiconFile : flag;
}

// A checkpoint together with the pipeline recorded in its metadata.
struct LoadedModel {
  ModelParams params;
  std::unique_ptr<Pipeline> pipeline;
};

LoadedModel LoadModel(const std::string &path,
                      const std::string &lexicon_override) {
  LoadedModel model;
  std::map<std::string, std::string> metadata;
  model.params = LoadCheckpoint(path, &metadata);
  std::string lexicon = lexicon_override;
  if (lexicon.empty() && metadata.count(kMetaLexicon)) {
    lexicon = metadata[kMetaLexicon];
  }
  int window = kDefaultContextWindow;
  if (metadata.count(kMetaWindow)) window = std::stoi(metadata[kMetaWindow]);
  model.pipeline = std::make_unique<Pipeline>(
      model.params.config.layout, model.params.seed,
      metadata.count(kMetaEmbeddings) ? metadata[kMetaEmbeddings] : "",
      LexiconPath(lexicon), window);
  return model;
}

std::vector<Conversation> ReadCorpus(const std::string &path, bool lenient,
                                     std::ostream &err) {
  ParseOptions options;
  options.lenient = lenient;
  ParseResult result = ParseCorpusFile(path, options);
  for (const std::string &warning : result.warnings) {
    err << "warning: " << warning << "\n";
  }
  return std::move(result.conversations);
}

// Writes to `path`, or to `out` when the path is empty or "-".
void WriteOutput(const std::string &path, const std::string &text,
                 std::ostream &out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path);
  file << text;
  if (!file) throw std::runtime_error("error writing " + path);
}

std::string CorpusText(const std::vector<Conversation> &corpus) {
  std::ostringstream s;
  WriteCorpus(s, corpus);
  return s.str();
}

std::string FormatStats(const CorpusStats &stats, bool records) {
  if (records) {
    nlohmann::ordered_json j;
    j["conversations"] = stats.num_conversations;
    j["turns"] = stats.num_turns;
    j["tokens"] = stats.num_tokens;
    j["references"] = stats.num_references;
    j["mean_tokens_per_turn"] = stats.mean_tokens_per_turn;
    nlohmann::ordered_json turns = nlohmann::ordered_json::object();
    for (auto [k, v] : stats.turns_per_conversation_histogram) {
      turns[std::to_string(k)] = v;
    }
    j["turns_per_conversation"] = turns;
    nlohmann::ordered_json entities = nlohmann::ordered_json::object();
    for (auto [k, v] : stats.entities_per_turn_histogram) {
      entities[std::to_string(k)] = v;
    }
    j["entities_per_turn"] = entities;
    nlohmann::ordered_json top = nlohmann::ordered_json::array();
    for (const auto &[text, count] : stats.top_reference_spans) {
      top.push_back({{"text", text}, {"count", count}});
    }
    j["top_references"] = top;
    return j.dump() + "\n";
  }
  std::ostringstream s;
  char mean[32];
  std::snprintf(mean, sizeof(mean), "%.2f", stats.mean_tokens_per_turn);
  s << "conversations         " << stats.num_conversations << "\n"
    << "turns                 " << stats.num_turns << "\n"
    << "tokens                " << stats.num_tokens << "\n"
    << "references            " << stats.num_references << "\n"
    << "mean tokens per turn  " << mean << "\n";
  s << "turns per conversation\n";
  for (auto [k, v] : stats.turns_per_conversation_histogram) {
    s << "  " << k << "\t" << v << "\n";
  }
  s << "entities per turn\n";
  for (auto [k, v] : stats.entities_per_turn_histogram) {
    s << "  " << k << "\t" << v << "\n";
  }
  s << "top references\n";
  for (const auto &[text, count] : stats.top_reference_spans) {
    s << "  " << text << "\t" << count << "\n";
  }
  return s.str();
}

std::vector<std::string> ReadWordList(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string word;
    if (fields >> word) words.push_back(Lowercase(word));
  }
  return words;
}

std::string DescribeReference(const EntityReference &ref) {
  std::ostringstream s;
  s << "  [" << ref.span.start << "," << ref.span.end << ") \""
    << JoinTokens(ref.span_text) << "\" id=" << ref.entity_id
    << (ref.is_new ? " new " : " existing ") << ToString(ref.props.type) << "/"
    << ToString(ref.props.gender) << "/" << ToString(ref.props.number);
  if (!ref.members.empty()) {
    s << " members={";
    for (size_t i = 0; i < ref.members.size(); ++i) {
      s << (i ? "," : "") << ref.members[i];
    }
    s << "}";
  }
  return s.str();
}

struct Flags {
  std::string corpus;
  std::string output;
  std::string checkpoint;
  std::string lexicon;
  std::string embeddings;
  std::string names;
  std::string train_out;
  std::string eval_out;
  std::string log;
  std::string format = "text";
  std::string report = "all";
  std::vector<std::string> participants;
  bool lenient = false;
  bool teacher_forcing = false;
  bool no_randomize = false;
  uint64_t seed = 1;
  double eval_fraction = 0.15;
  int top = 20;
  int jobs = 1;
  int checkpoint_every = 10;
  int window = kDefaultContextWindow;
  TrainConfig train;
  ModelConfig model;
};

void AddLayoutFlags(CLI::App *sub, Flags &f) {
  FeatureLayout &l = f.model.layout;
  sub->add_option("--capacity", l.capacity, "Entity ID capacity K")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--history", l.history, "Participation history H")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--word-dim", l.context_free_dim,
                  "Context-free embedding size D_w")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--context-dim", l.contextual_dim,
                  "Contextual embedding size D_c")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--d-model", f.model.d_model, "Transformer width")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--heads", f.model.num_heads, "Attention heads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--ffn-dim", f.model.ffn_dim, "Feed-forward width")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--head-hidden", f.model.head_hidden,
                  "Hidden width of the output head")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

int RunStats(const Flags &f, std::ostream &out, std::ostream &err) {
  CorpusStats stats = ComputeStats(ReadCorpus(f.corpus, f.lenient, err));
  if (f.top >= 0 && static_cast<int>(stats.top_reference_spans.size()) > f.top) {
    stats.top_reference_spans.resize(f.top);
  }
  out << FormatStats(stats, f.format == "records");
  return kExitOk;
}

int RunValidate(const Flags &f, std::ostream &out, std::ostream &err) {
  const auto corpus = ReadCorpus(f.corpus, f.lenient, err);
  int64_t turns = 0;
  for (const Conversation &c : corpus) turns += c.turns.size();
  out << "ok: " << corpus.size() << " conversations, " << turns
      << " turns\n";
  return kExitOk;
}

int RunAugment(const Flags &f, std::ostream &out, std::ostream &err) {
  const auto corpus = ReadCorpus(f.corpus, f.lenient, err);
  const auto pool = ReadWordList(f.names);
  WriteOutput(f.output, CorpusText(AugmentNames(corpus, pool, f.seed)), out);
  return kExitOk;
}

int RunSplit(const Flags &f, std::ostream &out, std::ostream &err) {
  const auto corpus = ReadCorpus(f.corpus, f.lenient, err);
  const CorpusSplit split = SplitCorpus(corpus, f.eval_fraction, f.seed);
  WriteOutput(f.train_out, CorpusText(split.train), out);
  WriteOutput(f.eval_out, CorpusText(split.eval), out);
  err << "train " << split.train.size() << " conversations, eval "
      << split.eval.size() << " conversations\n";
  return kExitOk;
}

int RunTrain(Flags f, std::ostream &err) {
  if (f.model.d_model % f.model.num_heads != 0) {
    throw UsageError("--d-model must be a multiple of --heads");
  }
  f.model.layout.Validate();
  f.train.seed = f.seed;
  f.train.jobs = f.jobs;
  f.train.randomize_ids = !f.no_randomize;
  f.train.encode.lenient = f.lenient;
  f.train.Validate();

  const auto corpus = ReadCorpus(f.corpus, f.lenient, err);
  const std::string lexicon = LexiconPath(f.lexicon);
  Pipeline pipeline(f.model.layout, f.seed, f.embeddings, lexicon, f.window);

  std::map<std::string, std::string> metadata = {
      {kMetaWindow, std::to_string(f.window)}};
  if (!f.embeddings.empty()) metadata[kMetaEmbeddings] = f.embeddings;
  if (!f.lexicon.empty()) metadata[kMetaLexicon] = f.lexicon;

  const std::string log_path = f.log.empty() ? f.output + ".log" : f.log;
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("cannot write " + log_path);

  TrainCallbacks callbacks;
  callbacks.checkpoint_every = f.checkpoint_every;
  callbacks.on_epoch = [&](const EpochLog &entry) {
    const std::string line = FormatEpochLog(entry);
    log << line << "\n" << std::flush;
    err << line << "\n";
  };
  callbacks.on_checkpoint = [&](int, const ModelParams &params) {
    SaveCheckpoint(f.output, params, metadata);
  };

  TrainResult result =
      Train(corpus, f.train, pipeline.encoder(),
            ModelParams::Initialize(f.model, f.seed), callbacks);
  SaveCheckpoint(f.output, result.params, metadata);
  if (result.diverged) {
    err << "error: training diverged; saved the last finite parameters\n";
    return kExitFailure;
  }
  if (result.stopped_early) {
    err << "stopped early; best epoch " << result.best_epoch << "\n";
  }
  return kExitOk;
}

int RunEval(const Flags &f, std::ostream &out, std::ostream &err) {
  const auto corpus = ReadCorpus(f.corpus, f.lenient, err);
  const LoadedModel model = LoadModel(f.checkpoint, f.lexicon);
  ModelScorer scorer(&model.params);
  TrackOptions options;
  options.encode.lenient = f.lenient;
  Tracker tracker(&model.pipeline->encoder(), &scorer, options);

  EndpointMetrics metrics;
  std::vector<ReferenceOutcome> with_tf, without_tf;
  for (const Conversation &c : corpus) {
    for (bool tf : {true, false}) {
      const ConversationScore score = ScoreConversation(
          c, ToConversationPrediction(tracker.TrackConversation(c, tf)), tf);
      if (tf == f.teacher_forcing) metrics += score.metrics;
      auto &sink = tf ? with_tf : without_tf;
      sink.insert(sink.end(), score.outcomes.begin(), score.outcomes.end());
    }
  }
  const auto &selected = f.teacher_forcing ? with_tf : without_tf;
  const ReportFormat format =
      f.format == "records" ? ReportFormat::kRecords : ReportFormat::kText;
  const bool text = format == ReportFormat::kText;
  const bool all = f.report == "all";
  if (all || f.report == "metrics") {
    if (text) {
      out << "endpoint metrics ("
          << (f.teacher_forcing ? "with" : "without")
          << " teacher forcing)\n";
    }
    out << FormatMetrics(metrics, format);
  }
  if (all || f.report == "propagation") {
    if (text) out << "\nentity ID accuracy per turn\n";
    out << FormatPropagation(ErrorPropagationFromOutcomes(with_tf, without_tf),
                             format);
  }
  if (all || f.report == "tokens") {
    if (text) out << "\nper-reference report\n";
    out << FormatTokenReport(PerTokenReport(selected, f.top), format);
  }
  if (all || f.report == "overall") {
    if (text) out << "\n";
    out << FormatOverall(ComputeOverallRates(selected), format);
  }
  return kExitOk;
}

int RunTrack(const Flags &f, std::ostream &out, std::ostream &err) {
  const auto corpus = ReadCorpus(f.corpus, f.lenient, err);
  const LoadedModel model = LoadModel(f.checkpoint, f.lexicon);
  ModelScorer scorer(&model.params);
  TrackOptions options;
  options.encode.lenient = f.lenient;
  Tracker tracker(&model.pipeline->encoder(), &scorer, options);
  std::ostringstream s;
  for (const Conversation &c : corpus) {
    const auto turns = tracker.TrackConversation(c, f.teacher_forcing);
    for (size_t t = 0; t < turns.size(); ++t) {
      s << SerializePrediction(c.id, static_cast<int>(t), turns[t]) << "\n";
    }
  }
  WriteOutput(f.output, s.str(), out);
  return kExitOk;
}

int RunRepl(const Flags &f, std::istream &in, std::ostream &out,
            std::ostream &err) {
  if (f.participants.size() != 2 ||
      Lowercase(f.participants[0]) == Lowercase(f.participants[1])) {
    throw UsageError("--participants takes two distinct handles");
  }
  const std::array<std::string, 2> participants = {
      Lowercase(f.participants[0]), Lowercase(f.participants[1])};
  const LoadedModel model = LoadModel(f.checkpoint, f.lexicon);
  const FeatureEncoder &encoder = model.pipeline->encoder();
  ModelScorer scorer(&model.params);
  TrackOptions options;
  options.encode.lenient = true;
  Tracker tracker(&encoder, &scorer, options);
  Repository repo =
      Repository::Seed(participants, encoder.layout().capacity,
                       encoder.resources().context_free);

  out << "participants: " << participants[0] << " (id 0), " << participants[1]
      << " (id 1); enter `sender: utterance`, empty line or EOF to quit\n";
  std::string line;
  while (out << "> " << std::flush, std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) break;
    const size_t colon = line.find(':');
    if (colon == std::string::npos) {
      err << "expected `sender: utterance`\n";
      continue;
    }
    Turn turn;
    std::istringstream sender(Lowercase(line.substr(0, colon)));
    sender >> turn.sender;
    if (turn.sender != participants[0] && turn.sender != participants[1]) {
      err << "unknown sender \"" << turn.sender << "\"\n";
      continue;
    }
    std::istringstream words(Lowercase(line.substr(colon + 1)));
    for (std::string w; words >> w;) turn.tokens.push_back(w);
    auto [prediction, next] = tracker.TrackTurn(repo, turn);
    repo = std::move(next);
    out << "references:\n";
    for (const EntityReference &ref : prediction.references) {
      out << DescribeReference(ref) << "\n";
    }
    for (const Span &span : prediction.dropped_spans) {
      out << "  dropped new span [" << span.start << "," << span.end
          << "): repository is full\n";
    }
    out << "repository:\n" << SerializeRepository(repo);
  }
  return kExitOk;
}

}  // namespace

std::string DefaultDataDir() {
  const char *env = std::getenv("CTRACK_DATA_DIR");
  return env != nullptr && *env != '\0' ? env : CTRACK_DEFAULT_DATA_DIR;
}

int RunCli(const std::vector<std::string> &args, std::istream &in,
           std::ostream &out, std::ostream &err) {
  CLI::App app{"Entity context tracking for conversations", "ctrack"};
  app.require_subcommand(1);
  Flags f;

  auto add_corpus = [&](CLI::App *sub) {
    sub->add_option("corpus", f.corpus, "Corpus file (JSON lines)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_flag("--lenient", f.lenient,
                  "Warn on unknown fields and evict old references instead "
                  "of failing");
  };
  auto add_model = [&](CLI::App *sub) {
    sub->add_option("--ckpt", f.checkpoint, "Model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--lexicon", f.lexicon,
                    "Name lexicon (default: data directory)");
  };
  auto add_format = [&](CLI::App *sub) {
    sub->add_option("--format", f.format, "Output format")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "records"}));
  };

  CLI::App *stats = app.add_subcommand("stats", "Corpus statistics");
  add_corpus(stats);
  add_format(stats);
  stats->add_option("--top", f.top, "Most frequent references to list")
      ->capture_default_str();

  CLI::App *validate =
      app.add_subcommand("validate", "Check a corpus against its invariants");
  add_corpus(validate);

  CLI::App *augment =
      app.add_subcommand("augment", "Replace proper names from a name pool");
  add_corpus(augment);
  augment->add_option("--names", f.names, "Name pool, one per line")
      ->required()
      ->check(CLI::ExistingFile);
  augment->add_option("--seed", f.seed)->capture_default_str();
  augment->add_option("-o,--output", f.output, "Output corpus (default stdout)");

  CLI::App *split = app.add_subcommand("split", "Split by scenario");
  add_corpus(split);
  split->add_option("--eval-frac", f.eval_fraction)
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", f.seed)->capture_default_str();
  split->add_option("--train-out", f.train_out)->required();
  split->add_option("--eval-out", f.eval_out)->required();

  CLI::App *train = app.add_subcommand("train", "Train a model");
  add_corpus(train);
  train->add_option("-o,--output", f.output, "Checkpoint to write")
      ->required();
  train->add_option("--log", f.log, "Epoch log (default <output>.log)");
  train->add_option("--epochs", f.train.epochs)->capture_default_str();
  train->add_option("--lr", f.train.learning_rate)->capture_default_str();
  train->add_option("--batch", f.train.batch_size)->capture_default_str();
  train->add_option("--alpha", f.train.alpha, "Stage-1 loss weight")
      ->capture_default_str();
  train->add_option("--patience", f.train.patience,
                    "Early-stopping patience in epochs; 0 disables")
      ->capture_default_str();
  train->add_option("--holdout-frac", f.train.holdout_fraction,
                    "Share of training conversations held out for early "
                    "stopping")
      ->capture_default_str();
  train->add_flag("--no-randomize-ids", f.no_randomize,
                  "Keep gold entity IDs instead of random offsets");
  train->add_option("--seed", f.seed)->capture_default_str();
  train->add_option("--jobs", f.jobs, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--ckpt-every", f.checkpoint_every,
                    "Epochs between intermediate checkpoints")
      ->capture_default_str();
  train->add_option("--embeddings", f.embeddings,
                    "Word vectors in text format (default: hash embeddings)")
      ->check(CLI::ExistingFile);
  train->add_option("--lexicon", f.lexicon,
                    "Name lexicon (default: data directory)");
  train->add_option("--context-window", f.window,
                    "Neighborhood of the contextual embedder")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  AddLayoutFlags(train, f);

  CLI::App *eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_corpus(eval);
  add_model(eval);
  add_format(eval);
  eval->add_flag("--teacher-forcing", f.teacher_forcing,
                 "Start every turn from the gold repository");
  eval->add_option("--report", f.report, "Report to print")
      ->capture_default_str()
      ->check(CLI::IsMember(
          {"all", "metrics", "propagation", "tokens", "overall"}));
  eval->add_option("--top", f.top, "Rows of the per-reference report")
      ->capture_default_str();

  CLI::App *track = app.add_subcommand("track", "Write per-turn predictions");
  add_corpus(track);
  add_model(track);
  track->add_flag("--teacher-forcing", f.teacher_forcing,
                  "Start every turn from the gold repository");
  track->add_option("-o,--output", f.output,
                    "Prediction file (default stdout)");

  CLI::App *repl = app.add_subcommand("repl", "Track an interactive dialogue");
  add_model(repl);
  repl->add_option("--participants", f.participants,
                   "Handles of the first sender and the other participant")
      ->required()
      ->expected(2);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(stats)) return RunStats(f, out, err);
    if (app.got_subcommand(validate)) return RunValidate(f, out, err);
    if (app.got_subcommand(augment)) return RunAugment(f, out, err);
    if (app.got_subcommand(split)) return RunSplit(f, out, err);
    if (app.got_subcommand(train)) return RunTrain(f, err);
    if (app.got_subcommand(eval)) return RunEval(f, out, err);
    if (app.got_subcommand(track)) return RunTrack(f, out, err);
    if (app.got_subcommand(repl)) return RunRepl(f, in, out, err);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError &e) {
    err << "line " << e.line() << ": " << e.field_path() << ": " << e.what()
        << "\n";
    return kExitFailure;
  } catch (const ValidationError &e) {
    err << "line " << e.line() << ": " << e.invariant() << ": " << e.what()
        << "\n";
    return kExitFailure;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ctrack
