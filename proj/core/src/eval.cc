#include "divex/eval.h"

#include <algorithm>
#include <set>

namespace divex {

PrfScores PrfFromCounts(const ConfusionCounts& c) {
  PrfScores s;
  const std::size_t predicted = c.tp + c.fp;
  const std::size_t actual = c.tp + c.fn;
  if (actual == 0) {
    s.recall = 1.0;
    s.precision = predicted == 0 ? 1.0 : 0.0;
  } else {
    s.recall = static_cast<double>(c.tp) / static_cast<double>(actual);
    s.precision = predicted == 0
                      ? 0.0
                      : static_cast<double>(c.tp) / static_cast<double>(predicted);
  }
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

ConfusionCounts CountTokens(const TokenMaskPair& pred,
                            const TokenMaskPair& gold) {
  if (pred.src.size() != gold.src.size() || pred.tgt.size() != gold.tgt.size()) {
    throw Error(ErrorCode::kShapeError,
                "mask lengths differ: prediction " +
                    std::to_string(pred.src.size()) + "/" +
                    std::to_string(pred.tgt.size()) + " vs gold " +
                    std::to_string(gold.src.size()) + "/" +
                    std::to_string(gold.tgt.size()));
  }
  ConfusionCounts c;
  const auto count = [&c](const std::vector<bool>& p,
                          const std::vector<bool>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] && g[i]) ++c.tp;
      if (p[i] && !g[i]) ++c.fp;
      if (!p[i] && g[i]) ++c.fn;
    }
  };
  count(pred.src, gold.src);
  count(pred.tgt, gold.tgt);
  return c;
}

std::string_view AveragingModeName(AveragingMode mode) {
  return mode == AveragingMode::kMicro ? "micro" : "macro";
}

AveragingMode ParseAveragingMode(std::string_view name) {
  if (name == "micro") return AveragingMode::kMicro;
  if (name == "macro") return AveragingMode::kMacro;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown averaging mode '" + std::string(name) + "'");
}

PrfScores TokenPrf(std::span<const TokenMaskPair> preds,
                   std::span<const TokenMaskPair> golds, AveragingMode mode) {
  if (preds.size() != golds.size()) {
    throw Error(ErrorCode::kShapeError,
                std::to_string(preds.size()) + " predictions for " +
                    std::to_string(golds.size()) + " gold instances");
  }
  if (mode == AveragingMode::kMicro) {
    ConfusionCounts total;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      total += CountTokens(preds[i], golds[i]);
    }
    return PrfFromCounts(total);
  }
  PrfScores mean;
  if (preds.empty()) return mean;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const PrfScores s = PrfFromCounts(CountTokens(preds[i], golds[i]));
    mean.precision += s.precision;
    mean.recall += s.recall;
    mean.f1 += s.f1;
  }
  const double n = static_cast<double>(preds.size());
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  return mean;
}

Minimality ComputeMinimality(
    std::span<const TokenMaskPair> masks,
    std::span<const std::pair<std::size_t, std::size_t>> lengths) {
  if (masks.size() != lengths.size()) {
    throw Error(ErrorCode::kShapeError,
                std::to_string(masks.size()) + " masks for " +
                    std::to_string(lengths.size()) + " length entries");
  }
  Minimality m;
  if (masks.empty()) return m;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const auto [ns, nt] = lengths[i];
    if (masks[i].src.size() != ns || masks[i].tgt.size() != nt || ns + nt == 0) {
      throw Error(ErrorCode::kShapeError,
                  "mask shape does not match pair lengths at instance " +
                      std::to_string(i));
    }
    const double marked = static_cast<double>(masks[i].CountTrue());
    m.mean_tokens += marked;
    m.mean_fraction += marked / static_cast<double>(ns + nt);
  }
  const double n = static_cast<double>(masks.size());
  m.mean_tokens /= n;
  m.mean_fraction /= n;
  return m;
}

EvalReport Evaluate(std::span<const TokenMaskPair> preds,
                    std::span<const TokenMaskPair> golds) {
  EvalReport report;
  report.micro = TokenPrf(preds, golds, AveragingMode::kMicro);
  report.macro = TokenPrf(preds, golds, AveragingMode::kMacro);
  std::vector<std::pair<std::size_t, std::size_t>> lengths;
  lengths.reserve(preds.size());
  for (const TokenMaskPair& p : preds) {
    lengths.emplace_back(p.src.size(), p.tgt.size());
  }
  report.minimality = ComputeMinimality(preds, lengths);
  report.n_instances = preds.size();
  return report;
}

// ---------------------------------------------------------------------------

std::string_view LabelName(Label label) {
  return label == Label::kEquivalent ? "equivalent" : "divergent";
}

Label ParseLabel(std::string_view name) {
  if (name == "equivalent") return Label::kEquivalent;
  if (name == "divergent") return Label::kDivergent;
  throw Error(ErrorCode::kParseError,
              "unknown label '" + std::string(name) + "'");
}

std::string_view ConditionName(Condition condition) {
  return condition == Condition::kWithHighlights ? "with_highlights"
                                                 : "without_highlights";
}

Condition ParseCondition(std::string_view name) {
  if (name == "with_highlights") return Condition::kWithHighlights;
  if (name == "without_highlights") return Condition::kWithoutHighlights;
  throw Error(ErrorCode::kParseError,
              "unknown condition '" + std::string(name) + "'");
}

std::string_view SublabelName(Sublabel sublabel) {
  switch (sublabel) {
    case Sublabel::kAdded: return "added";
    case Sublabel::kChanged: return "changed";
    case Sublabel::kMinor: return "minor";
    case Sublabel::kMajor: return "major";
  }
  return "unknown";
}

Sublabel ParseSublabel(std::string_view name) {
  for (Sublabel s : {Sublabel::kAdded, Sublabel::kChanged, Sublabel::kMinor,
                     Sublabel::kMajor}) {
    if (SublabelName(s) == name) return s;
  }
  throw Error(ErrorCode::kParseError,
              "unknown sublabel '" + std::string(name) + "'");
}

void AnnotationRecord::Validate() const {
  const auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kValidationError, what);
  };
  if (instance_id.empty()) fail("instance_id is empty");
  if (annotator_id.empty()) fail("annotator_id is empty");
  if (sublabel && label != Label::kDivergent) {
    fail("sublabel is only allowed when label is divergent");
  }
  if (elapsed_ms < 0) fail("elapsed_ms is negative");
}

VoteResult MajorityVote(std::span<const Label> labels) {
  if (labels.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "majority vote over no labels");
  }
  const auto divergent =
      std::count(labels.begin(), labels.end(), Label::kDivergent);
  const auto equivalent = static_cast<std::ptrdiff_t>(labels.size()) - divergent;
  if (divergent == equivalent) return {Label::kDivergent, true};
  return {divergent > equivalent ? Label::kDivergent : Label::kEquivalent,
          false};
}

namespace {

Label GoldFor(const std::map<std::string, Label>& gold,
              const std::string& instance_id) {
  const auto it = gold.find(instance_id);
  if (it == gold.end()) {
    throw Error(ErrorCode::kMissingGold,
                "no gold label for instance '" + instance_id + "'");
  }
  return it->second;
}

void Tally(Label predicted, Label truth, ConfusionCounts& c) {
  const bool p = predicted == Label::kDivergent;
  const bool t = truth == Label::kDivergent;
  if (p && t) ++c.tp;
  if (p && !t) ++c.fp;
  if (!p && t) ++c.fn;
}

}  // namespace

PrfScores AnnotationAccuracy(std::span<const AnnotationRecord> records,
                             const std::map<std::string, Label>& gold,
                             AccuracyScope scope) {
  ConfusionCounts c;
  if (scope == AccuracyScope::kGroup) {
    for (const AnnotationRecord& r : records) {
      if (r.attention_check) continue;
      Tally(r.label, GoldFor(gold, r.instance_id), c);
    }
    return PrfFromCounts(c);
  }
  std::map<std::string, std::vector<Label>> by_instance;
  for (const AnnotationRecord& r : records) {
    if (r.attention_check) continue;
    by_instance[r.instance_id].push_back(r.label);
  }
  for (const auto& [id, labels] : by_instance) {
    Tally(MajorityVote(labels).label, GoldFor(gold, id), c);
  }
  return PrfFromCounts(c);
}

std::string_view AnnotationMetricName(AnnotationMetric metric) {
  switch (metric) {
    case AnnotationMetric::kAccuracy: return "accuracy";
    case AnnotationMetric::kPrecision: return "precision";
    case AnnotationMetric::kRecall: return "recall";
    case AnnotationMetric::kF1: return "f1";
  }
  return "unknown";
}

AnnotationMetric ParseAnnotationMetric(std::string_view name) {
  for (AnnotationMetric m :
       {AnnotationMetric::kAccuracy, AnnotationMetric::kPrecision,
        AnnotationMetric::kRecall, AnnotationMetric::kF1}) {
    if (AnnotationMetricName(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown metric '" + std::string(name) + "'");
}

double AnnotationMetricValue(std::span<const AnnotationRecord> records,
                             const std::map<std::string, Label>& gold,
                             AnnotationMetric metric) {
  if (metric == AnnotationMetric::kAccuracy) {
    std::size_t scored = 0;
    std::size_t correct = 0;
    for (const AnnotationRecord& r : records) {
      if (r.attention_check) continue;
      ++scored;
      if (r.label == GoldFor(gold, r.instance_id)) ++correct;
    }
    return scored == 0 ? 0.0
                       : static_cast<double>(correct) / static_cast<double>(scored);
  }
  const PrfScores s = AnnotationAccuracy(records, gold, AccuracyScope::kGroup);
  if (metric == AnnotationMetric::kPrecision) return s.precision;
  if (metric == AnnotationMetric::kRecall) return s.recall;
  return s.f1;
}

std::optional<double> AnnotationKappa(
    std::span<const AnnotationRecord> records) {
  std::map<std::string, std::map<std::string, Label>> by_annotator;
  for (const AnnotationRecord& r : records) {
    if (r.attention_check) continue;
    by_annotator[r.annotator_id][r.instance_id] = r.label;
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (auto a = by_annotator.begin(); a != by_annotator.end(); ++a) {
    for (auto b = std::next(a); b != by_annotator.end(); ++b) {
      std::vector<Label> la;
      std::vector<Label> lb;
      for (const auto& [id, label] : a->second) {
        if (auto it = b->second.find(id); it != b->second.end()) {
          la.push_back(label);
          lb.push_back(it->second);
        }
      }
      if (la.empty()) continue;
      sum += CohenKappa<Label>(la, lb).kappa;
      ++pairs;
    }
  }
  if (pairs == 0) return std::nullopt;
  return sum / static_cast<double>(pairs);
}

}  // namespace divex
