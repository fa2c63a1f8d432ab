#ifndef DIVEX_EVAL_H_
#define DIVEX_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "divex/core.h"
#include "divex/random.h"

namespace divex {

// ---------------------------------------------------------------------------
// Agreement with token rationales.

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) =
      default;
};

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Precision, recall and their harmonic mean. An empty gold set has recall 1;
// it has precision 1 only if the prediction is empty too. An empty
// prediction against a non-empty gold set scores 0 throughout.
PrfScores PrfFromCounts(const ConfusionCounts& counts);

// Both sides of an instance are pooled into a single token set.
ConfusionCounts CountTokens(const TokenMaskPair& pred, const TokenMaskPair& gold);

enum class AveragingMode { kMicro, kMacro };

std::string_view AveragingModeName(AveragingMode mode);
AveragingMode ParseAveragingMode(std::string_view name);

// Micro pools counts over the corpus; macro averages per-instance scores.
PrfScores TokenPrf(std::span<const TokenMaskPair> preds,
                   std::span<const TokenMaskPair> golds, AveragingMode mode);

struct Minimality {
  double mean_tokens = 0.0;
  double mean_fraction = 0.0;
};

// `lengths` holds (Ns, Nt) per instance.
Minimality ComputeMinimality(
    std::span<const TokenMaskPair> masks,
    std::span<const std::pair<std::size_t, std::size_t>> lengths);

struct EvalReport {
  PrfScores micro;
  PrfScores macro;
  Minimality minimality;
  std::size_t n_instances = 0;
};

// Minimality is measured on the predictions.
EvalReport Evaluate(std::span<const TokenMaskPair> preds,
                    std::span<const TokenMaskPair> golds);

// ---------------------------------------------------------------------------
// Human annotations.

enum class Label { kEquivalent, kDivergent };
enum class Condition { kWithHighlights, kWithoutHighlights };
// Study I asks for added/changed, study II for minor/major severity.
enum class Sublabel { kAdded, kChanged, kMinor, kMajor };

std::string_view LabelName(Label label);
Label ParseLabel(std::string_view name);
std::string_view ConditionName(Condition condition);
Condition ParseCondition(std::string_view name);
std::string_view SublabelName(Sublabel sublabel);
Sublabel ParseSublabel(std::string_view name);

struct AnnotationRecord {
  std::string study_id;
  std::string session_id;
  std::string annotator_id;
  std::string instance_id;
  Condition condition = Condition::kWithoutHighlights;
  Label label = Label::kEquivalent;
  std::optional<Sublabel> sublabel;
  std::int64_t elapsed_ms = 0;         // client reported
  std::int64_t server_elapsed_ms = 0;  // delivery to receipt, server clock
  std::int64_t received_at_ms = 0;     // unix epoch, server clock
  bool attention_check = false;
  std::optional<bool> attention_passed;

  // Throws kValidationError (sublabel only with a divergent label, non-empty
  // ids, non-negative elapsed time).
  void Validate() const;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) =
      default;
};

struct VoteResult {
  Label label = Label::kEquivalent;
  bool tie = false;
};

// Modal label; ties go to kDivergent and are flagged. `labels` must be
// non-empty.
VoteResult MajorityVote(std::span<const Label> labels);

enum class AccuracyScope { kGroup, kMajority };

// Precision/recall/F1 with divergent as the positive class. Group scope
// scores every record, majority scope one vote per instance. Attention-check
// records are ignored.
PrfScores AnnotationAccuracy(std::span<const AnnotationRecord> records,
                             const std::map<std::string, Label>& gold,
                             AccuracyScope scope);

enum class AnnotationMetric { kAccuracy, kPrecision, kRecall, kF1 };

std::string_view AnnotationMetricName(AnnotationMetric metric);
AnnotationMetric ParseAnnotationMetric(std::string_view name);

// Group-scope metric over a record set.
double AnnotationMetricValue(std::span<const AnnotationRecord> records,
                             const std::map<std::string, Label>& gold,
                             AnnotationMetric metric);

// ---------------------------------------------------------------------------
// Bootstrap significance.

// One-sided test that metric(A) > metric(B). For each resample r the groups
// are redrawn with replacement to their own sizes using
// Rng(SplitSeed(seed, r)) (A first, then B), and d_r = m(A*) - m(B*).
// Returns (1 + #{d_r <= 0}) / (n_resamples + 1).
template <typename Record, typename Metric>
double BootstrapPValue(std::span<const Record> group_a,
                       std::span<const Record> group_b, Metric metric,
                       std::size_t n_resamples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Inter-annotator agreement.

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double expected = 0.0;  // p_e
  // Chance agreement is 1 (both raters constant); kappa is then 1 if they
  // agree everywhere and 0 otherwise.
  bool degenerate = false;
};

template <typename L>
KappaResult CohenKappa(std::span<const L> a, std::span<const L> b);

// Mean of Cohen's kappa over every pair of raters.
template <typename L>
double MeanPairwiseKappa(const std::vector<std::vector<L>>& raters);

// Mean pairwise kappa over annotators, each pair compared on the instances
// both labelled. Pairs without shared instances are skipped; returns
// nullopt when no pair shares an instance.
std::optional<double> AnnotationKappa(std::span<const AnnotationRecord> records);

// ---------------------------------------------------------------------------
// Template definitions.

template <typename Record, typename Metric>
double BootstrapPValue(std::span<const Record> group_a,
                       std::span<const Record> group_b, Metric metric,
                       std::size_t n_resamples, std::uint64_t seed) {
  if (group_a.empty() || group_b.empty()) {
    throw Error(ErrorCode::kEmptyGroup, "bootstrap needs two non-empty groups");
  }
  std::vector<Record> sample_a(group_a.size());
  std::vector<Record> sample_b(group_b.size());
  std::size_t not_greater = 0;
  for (std::size_t r = 0; r < n_resamples; ++r) {
    Rng rng(SplitSeed(seed, r));
    for (auto& slot : sample_a) slot = group_a[UniformIndex(rng, group_a.size())];
    for (auto& slot : sample_b) slot = group_b[UniformIndex(rng, group_b.size())];
    const double diff =
        metric(std::span<const Record>(sample_a)) -
        metric(std::span<const Record>(sample_b));
    if (diff <= 0.0) ++not_greater;
  }
  return static_cast<double>(1 + not_greater) /
         static_cast<double>(n_resamples + 1);
}

template <typename L>
KappaResult CohenKappa(std::span<const L> a, std::span<const L> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "kappa needs equal-length label lists (" +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  if (a.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "kappa needs at least one label");
  }
  std::map<L, std::size_t> count_a;
  std::map<L, std::size_t> count_b;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++count_a[a[i]];
    ++count_b[b[i]];
    if (a[i] == b[i]) ++agree;
  }
  const double n = static_cast<double>(a.size());
  KappaResult r;
  r.observed = static_cast<double>(agree) / n;
  for (const auto& [label, ca] : count_a) {
    if (auto it = count_b.find(label); it != count_b.end()) {
      r.expected += (static_cast<double>(ca) / n) *
                    (static_cast<double>(it->second) / n);
    }
  }
  if (r.expected >= 1.0) {
    r.degenerate = true;
    r.kappa = r.observed >= 1.0 ? 1.0 : 0.0;
    return r;
  }
  r.kappa = (r.observed - r.expected) / (1.0 - r.expected);
  return r;
}

template <typename L>
double MeanPairwiseKappa(const std::vector<std::vector<L>>& raters) {
  if (raters.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "kappa needs at least two raters");
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < raters.size(); ++i) {
    for (std::size_t j = i + 1; j < raters.size(); ++j) {
      sum += CohenKappa<L>(raters[i], raters[j]).kappa;
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

}  // namespace divex

#endif  // DIVEX_EVAL_H_
