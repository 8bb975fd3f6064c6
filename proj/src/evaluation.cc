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

#include "ctrack/evaluation.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ctrack {

namespace {

double Ratio(int64_t num, int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double Counts::precision() const { return Ratio(tp, tp + fp); }
double Counts::recall() const { return Ratio(tp, tp + fn); }
double Counts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Counts &Counts::operator+=(const Counts &other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

EndpointMetrics &EndpointMetrics::operator+=(const EndpointMetrics &other) {
  new_entities += other.new_entities;
  existing_id += other.existing_id;
  properties += other.properties;
  membership += other.membership;
  return *this;
}

Alignment MatchReferences(const std::vector<GoldReference> &gold,
                          const std::vector<GoldReference> &pred) {
  Alignment alignment;
  std::vector<bool> used(pred.size(), false);
  for (size_t g = 0; g < gold.size(); ++g) {
    bool found = false;
    for (size_t p = 0; p < pred.size(); ++p) {
      if (!used[p] && pred[p].span == gold[g].span) {
        used[p] = true;
        alignment.matched.emplace_back(static_cast<int>(g),
                                       static_cast<int>(p));
        found = true;
        break;
      }
    }
    if (!found) alignment.unmatched_gold.push_back(static_cast<int>(g));
  }
  for (size_t p = 0; p < pred.size(); ++p) {
    if (!used[p]) alignment.unmatched_pred.push_back(static_cast<int>(p));
  }
  return alignment;
}

ConversationPrediction ToConversationPrediction(
    const std::vector<TurnPrediction> &turns) {
  ConversationPrediction out;
  for (const TurnPrediction &turn : turns) {
    out.push_back(ToGoldReferences(turn.references));
  }
  return out;
}

ConversationScore ScoreConversation(const Conversation &conversation,
                                    const ConversationPrediction &prediction,
                                    bool teacher_forcing) {
  ConversationScore score;
  EndpointMetrics &metrics = score.metrics;
  std::map<int, int> link = {{kFirstSenderId, kFirstSenderId},
                             {kOtherParticipantId, kOtherParticipantId}};
  std::set<int> gold_known = {kFirstSenderId, kOtherParticipantId};
  static const std::vector<GoldReference> kNone;

  for (size_t t = 0; t < conversation.turns.size(); ++t) {
    const Turn &turn = conversation.turns[t];
    const std::vector<GoldReference> &gold = turn.refs;
    const std::vector<GoldReference> &pred =
        t < prediction.size() ? prediction[t] : kNone;
    if (teacher_forcing) {
      link.clear();
      for (int id : gold_known) link[id] = id;
    }
    const Alignment alignment = MatchReferences(gold, pred);
    auto correct = [&](int gold_id, int pred_id) {
      auto it = link.find(gold_id);
      return it != link.end() && it->second == pred_id;
    };

    // New entities; matched pairs define the ID correspondence.
    for (const GoldReference &g : gold) metrics.new_entities.fn += g.is_new;
    for (const GoldReference &p : pred) metrics.new_entities.fp += p.is_new;
    for (auto [gi, pi] : alignment.matched) {
      if (gold[gi].is_new && pred[pi].is_new) {
        ++metrics.new_entities.tp;
        --metrics.new_entities.fn;
        --metrics.new_entities.fp;
        link[gold[gi].entity_id] = pred[pi].entity_id;
      }
    }

    for (const GoldReference &g : gold) metrics.existing_id.fn += !g.is_new;
    for (const GoldReference &p : pred) metrics.existing_id.fp += !p.is_new;
    std::vector<bool> id_ok(gold.size(), false);
    for (auto [gi, pi] : alignment.matched) {
      const GoldReference &g = gold[gi];
      const GoldReference &p = pred[pi];
      if (g.is_new) {
        id_ok[gi] = p.is_new;
      } else if (!p.is_new && correct(g.entity_id, p.entity_id)) {
        id_ok[gi] = true;
        ++metrics.existing_id.tp;
        --metrics.existing_id.fn;
        --metrics.existing_id.fp;
      }

      const int agree = (g.props.type == p.props.type) +
                        (g.props.gender == p.props.gender) +
                        (g.props.number == p.props.number);
      metrics.properties.tp += agree;
      metrics.properties.fp += 3 - agree;
      metrics.properties.fn += 3 - agree;

      const bool gold_group = g.props.number == Number::kPlural;
      const bool pred_group = p.props.number == Number::kPlural;
      const int64_t gold_items = gold_group ? g.members.size() : 0;
      const int64_t pred_items = pred_group ? p.members.size() : 0;
      int64_t hits = 0;
      if (gold_group && pred_group) {
        for (int pm : p.members) {
          for (int gm : g.members) {
            if (correct(gm, pm)) {
              ++hits;
              break;
            }
          }
        }
      }
      metrics.membership.tp += hits;
      metrics.membership.fp += pred_items - hits;
      metrics.membership.fn += gold_items - hits;
    }

    std::vector<bool> detected(gold.size(), false);
    for (auto [gi, pi] : alignment.matched) detected[gi] = true;
    for (size_t gi = 0; gi < gold.size(); ++gi) {
      const GoldReference &g = gold[gi];
      ReferenceOutcome outcome;
      outcome.turn_index = static_cast<int>(t);
      std::vector<std::string> text(turn.tokens.begin() + g.span.start,
                                    turn.tokens.begin() + g.span.end);
      outcome.text = JoinTokens(text);
      outcome.detected = detected[gi];
      outcome.id_correct = id_ok[gi];
      score.outcomes.push_back(std::move(outcome));
      if (g.is_new) gold_known.insert(g.entity_id);
    }
  }
  return score;
}

EndpointMetrics ScoreCorpus(const std::vector<Conversation> &corpus,
                            const std::vector<ConversationPrediction> &preds,
                            bool teacher_forcing) {
  if (preds.size() != corpus.size()) {
    throw std::invalid_argument("one prediction per conversation expected");
  }
  EndpointMetrics total;
  for (size_t i = 0; i < corpus.size(); ++i) {
    total += ScoreConversation(corpus[i], preds[i], teacher_forcing).metrics;
  }
  return total;
}

EndpointMetrics Evaluate(const std::vector<Conversation> &corpus,
                         const Tracker &tracker, bool teacher_forcing) {
  EndpointMetrics total;
  for (const Conversation &c : corpus) {
    const ConversationPrediction pred = ToConversationPrediction(
        tracker.TrackConversation(c, teacher_forcing));
    total += ScoreConversation(c, pred, teacher_forcing).metrics;
  }
  return total;
}

std::vector<TurnAccuracyRow> ErrorPropagationFromOutcomes(
    const std::vector<ReferenceOutcome> &with_tf,
    const std::vector<ReferenceOutcome> &without_tf, int max_turn) {
  std::vector<TurnAccuracyRow> rows(max_turn + 1);
  std::vector<int64_t> correct_with(max_turn + 1, 0);
  std::vector<int64_t> correct_without(max_turn + 1, 0);
  for (const ReferenceOutcome &o : with_tf) {
    const int row = std::min(o.turn_index, max_turn);
    ++rows[row].references_with_tf;
    correct_with[row] += o.id_correct;
  }
  for (const ReferenceOutcome &o : without_tf) {
    const int row = std::min(o.turn_index, max_turn);
    ++rows[row].references_without_tf;
    correct_without[row] += o.id_correct;
  }
  for (int i = 0; i <= max_turn; ++i) {
    rows[i].turn_index = i;
    rows[i].accuracy_with_tf = Ratio(correct_with[i], rows[i].references_with_tf);
    rows[i].accuracy_without_tf =
        Ratio(correct_without[i], rows[i].references_without_tf);
    rows[i].difference = rows[i].accuracy_with_tf - rows[i].accuracy_without_tf;
  }
  return rows;
}

std::vector<TurnAccuracyRow> ErrorPropagationStudy(
    const std::vector<Conversation> &corpus, const Tracker &tracker,
    int max_turn) {
  std::vector<ReferenceOutcome> with_tf, without_tf;
  for (const Conversation &c : corpus) {
    for (bool tf : {true, false}) {
      const ConversationPrediction pred =
          ToConversationPrediction(tracker.TrackConversation(c, tf));
      auto outcomes = ScoreConversation(c, pred, tf).outcomes;
      auto &sink = tf ? with_tf : without_tf;
      sink.insert(sink.end(), outcomes.begin(), outcomes.end());
    }
  }
  return ErrorPropagationFromOutcomes(with_tf, without_tf, max_turn);
}

std::vector<TokenReportRow> PerTokenReport(
    const std::vector<ReferenceOutcome> &outcomes, int top_n) {
  struct Tally {
    int64_t count = 0, detected = 0, correct = 0;
  };
  std::map<std::string, Tally> tallies;
  for (const ReferenceOutcome &o : outcomes) {
    Tally &t = tallies[o.text];
    ++t.count;
    t.detected += o.detected;
    t.correct += o.id_correct;
  }
  std::vector<TokenReportRow> rows;
  for (const auto &[text, t] : tallies) {
    rows.push_back({text, t.count, Ratio(t.detected, t.count),
                    Ratio(t.correct, t.count)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TokenReportRow &a, const TokenReportRow &b) {
                     return a.count > b.count;
                   });
  if (top_n >= 0 && static_cast<int>(rows.size()) > top_n) rows.resize(top_n);
  return rows;
}

OverallRates ComputeOverallRates(const std::vector<ReferenceOutcome> &outcomes) {
  OverallRates rates;
  int64_t detected = 0, correct = 0;
  for (const ReferenceOutcome &o : outcomes) {
    ++rates.references;
    detected += o.detected;
    correct += o.id_correct;
  }
  rates.detection_rate = Ratio(detected, rates.references);
  rates.id_accuracy = Ratio(correct, rates.references);
  return rates;
}

namespace {

std::string Fixed(double v, int precision = 1) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string Pad(const std::string &s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string PadLeft(const std::string &s, size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string FormatMetrics(const EndpointMetrics &metrics, ReportFormat format) {
  const std::pair<const char *, const Counts *> rows[] = {
      {"new_entities", &metrics.new_entities},
      {"existing_id", &metrics.existing_id},
      {"properties", &metrics.properties},
      {"membership", &metrics.membership}};
  std::ostringstream out;
  if (format == ReportFormat::kRecords) {
    for (const auto &[name, c] : rows) {
      nlohmann::ordered_json j;
      j["endpoint"] = name;
      j["tp"] = c->tp;
      j["fp"] = c->fp;
      j["fn"] = c->fn;
      j["precision"] = c->precision();
      j["recall"] = c->recall();
      j["f1"] = c->f1();
      out << j.dump() << '\n';
    }
    return out.str();
  }
  out << Pad("endpoint", 14) << PadLeft("P", 7) << PadLeft("R", 7)
      << PadLeft("F1", 7) << PadLeft("tp", 8) << PadLeft("fp", 8)
      << PadLeft("fn", 8) << '\n';
  for (const auto &[name, c] : rows) {
    out << Pad(name, 14) << PadLeft(Fixed(100 * c->precision()), 7)
        << PadLeft(Fixed(100 * c->recall()), 7)
        << PadLeft(Fixed(100 * c->f1()), 7)
        << PadLeft(std::to_string(c->tp), 8)
        << PadLeft(std::to_string(c->fp), 8)
        << PadLeft(std::to_string(c->fn), 8) << '\n';
  }
  return out.str();
}

std::string FormatPropagation(const std::vector<TurnAccuracyRow> &rows,
                              ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::kRecords) {
    for (const TurnAccuracyRow &r : rows) {
      nlohmann::ordered_json j;
      j["turn"] = r.turn_index;
      j["with_teacher_forcing"] = r.accuracy_with_tf;
      j["without_teacher_forcing"] = r.accuracy_without_tf;
      j["difference"] = r.difference;
      j["references"] = r.references_with_tf;
      out << j.dump() << '\n';
    }
    return out.str();
  }
  out << Pad("turn", 6) << PadLeft("with TF", 10) << PadLeft("w/o TF", 10)
      << PadLeft("diff", 8) << PadLeft("refs", 8) << '\n';
  for (const TurnAccuracyRow &r : rows) {
    out << Pad(std::to_string(r.turn_index), 6)
        << PadLeft(Fixed(100 * r.accuracy_with_tf), 10)
        << PadLeft(Fixed(100 * r.accuracy_without_tf), 10)
        << PadLeft(Fixed(100 * r.difference), 8)
        << PadLeft(std::to_string(r.references_with_tf), 8) << '\n';
  }
  return out.str();
}

std::string FormatTokenReport(const std::vector<TokenReportRow> &rows,
                              ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::kRecords) {
    for (const TokenReportRow &r : rows) {
      nlohmann::ordered_json j;
      j["text"] = r.text;
      j["count"] = r.count;
      j["detection_rate"] = r.detection_rate;
      j["id_accuracy"] = r.id_accuracy;
      out << j.dump() << '\n';
    }
    return out.str();
  }
  out << Pad("reference", 16) << PadLeft("count", 8) << PadLeft("detected", 10)
      << PadLeft("id ok", 8) << '\n';
  for (const TokenReportRow &r : rows) {
    out << Pad(r.text, 16) << PadLeft(std::to_string(r.count), 8)
        << PadLeft(Fixed(100 * r.detection_rate), 10)
        << PadLeft(Fixed(100 * r.id_accuracy), 8) << '\n';
  }
  return out.str();
}

std::string FormatOverall(const OverallRates &rates, ReportFormat format) {
  if (format == ReportFormat::kRecords) {
    nlohmann::ordered_json j;
    j["references"] = rates.references;
    j["detection_rate"] = rates.detection_rate;
    j["id_accuracy"] = rates.id_accuracy;
    return j.dump() + "\n";
  }
  return "references " + std::to_string(rates.references) + ": detected " +
         Fixed(100 * rates.detection_rate) + "%, resolved IDs " +
         Fixed(100 * rates.id_accuracy) + "%\n";
}

}  // namespace ctrack
