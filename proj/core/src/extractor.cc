#include "divex/extractor.h"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <string>

namespace divex {

void ExtractorConfig::Validate() const {
  if (!std::isfinite(epsilon) || epsilon < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "epsilon must be finite and non-negative");
  }
  if (max_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
  }
  if (max_phrase_len && *max_phrase_len < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_phrase_len must be >= 1");
  }
}

double BrevityReward(std::size_t pair_len, std::size_t phrase_len,
                     double score_del) {
  const double ratio =
      static_cast<double>(phrase_len) / static_cast<double>(pair_len);
  return score_del >= 0.0 ? std::exp(-ratio) : std::exp(ratio);
}

std::vector<CandidateEvaluation> CandidateSet(const SentencePair& pair,
                                              const PhraseTable& table,
                                              const Scorer& scorer,
                                              double base_score,
                                              const ExtractorConfig& cfg) {
  std::vector<PhrasePair> phrases;
  std::vector<SentencePair> erased;
  for (const PhrasePair& p : table.entries) {
    if (p.src.length() >= pair.src.size() || p.tgt.length() >= pair.tgt.size()) {
      continue;
    }
    phrases.push_back(p);
    erased.push_back(DeletePhrase(pair, p));
  }
  if (erased.empty()) return {};
  const std::vector<double> scores = scorer.ScoreBatch(erased);

  std::vector<CandidateEvaluation> out;
  const std::size_t pair_len = pair.TotalLength();
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (!(scores[i] > base_score + cfg.epsilon)) continue;
    CandidateEvaluation c;
    c.phrase = phrases[i];
    c.score_del = scores[i];
    c.br = BrevityReward(pair_len, phrases[i].length(), scores[i]);
    c.objective = cfg.use_brevity_reward ? c.score_del * c.br : c.score_del;
    out.push_back(c);
  }
  return out;
}

bool PrefersCandidate(const CandidateEvaluation& a,
                      const CandidateEvaluation& b) {
  if (a.objective != b.objective) return a.objective > b.objective;
  if (a.score_del != b.score_del) return a.score_del > b.score_del;
  if (a.phrase.length() != b.phrase.length()) {
    return a.phrase.length() < b.phrase.length();
  }
  if (a.phrase.src.start != b.phrase.src.start) {
    return a.phrase.src.start < b.phrase.src.start;
  }
  if (a.phrase.tgt.start != b.phrase.tgt.start) {
    return a.phrase.tgt.start < b.phrase.tgt.start;
  }
  if (a.phrase.src.end != b.phrase.src.end) {
    return a.phrase.src.end < b.phrase.src.end;
  }
  return a.phrase.tgt.end < b.phrase.tgt.end;
}

const CandidateEvaluation& SelectHighlight(
    const std::vector<CandidateEvaluation>& candidates) {
  if (candidates.empty()) {
    throw Error(ErrorCode::kEmptyCandidates, "no candidate phrases to select");
  }
  const CandidateEvaluation* best = &candidates.front();
  for (const CandidateEvaluation& c : candidates) {
    if (PrefersCandidate(c, *best)) best = &c;
  }
  return *best;
}

DeletionHistory::DeletionHistory(std::size_t src_len, std::size_t tgt_len)
    : src_index_(src_len), tgt_index_(tgt_len) {
  for (std::size_t i = 0; i < src_len; ++i) src_index_[i] = i;
  for (std::size_t j = 0; j < tgt_len; ++j) tgt_index_[j] = j;
}

void DeletionHistory::Apply(const PhrasePair& phrase) {
  if (phrase.src.end > src_index_.size() || phrase.tgt.end > tgt_index_.size() ||
      phrase.src.start > phrase.src.end || phrase.tgt.start > phrase.tgt.end) {
    throw Error(ErrorCode::kInconsistentHistory,
                "erasure exceeds the current pair (step " +
                    std::to_string(steps_.size()) + ")");
  }
  const auto erase = [](std::vector<std::size_t>& index, const Span& span) {
    index.erase(index.begin() + static_cast<std::ptrdiff_t>(span.start),
                index.begin() + static_cast<std::ptrdiff_t>(span.end));
  };
  erase(src_index_, phrase.src);
  erase(tgt_index_, phrase.tgt);
  steps_.push_back(phrase);
}

OriginalTokens RemapTokensAfterDelete(const PhrasePair& reduced,
                                      const DeletionHistory& history) {
  const auto& si = history.src_index();
  const auto& ti = history.tgt_index();
  if (reduced.src.end > si.size() || reduced.tgt.end > ti.size()) {
    throw Error(ErrorCode::kInconsistentHistory,
                "phrase lies outside the reduced pair");
  }
  OriginalTokens out;
  for (std::size_t k = reduced.src.start; k < reduced.src.end; ++k) {
    out.src.push_back(si[k]);
  }
  for (std::size_t k = reduced.tgt.start; k < reduced.tgt.end; ++k) {
    out.tgt.push_back(ti[k]);
  }
  return out;
}

PhrasePair RemapSpansAfterDelete(const PhrasePair& reduced,
                                 const DeletionHistory& history) {
  const OriginalTokens tokens = RemapTokensAfterDelete(reduced, history);
  const auto cover = [](const std::vector<std::size_t>& idx) {
    return idx.empty() ? Span{} : Span{idx.front(), idx.back() + 1};
  };
  return {cover(tokens.src), cover(tokens.tgt)};
}

Alignment RemapAlignmentAfterDelete(const Alignment& alignment,
                                    const PhrasePair& phrase) {
  const auto shift = [](std::size_t i, const Span& span) {
    return i >= span.end ? i - span.length() : i;
  };
  Alignment out;
  for (const Link& l : alignment.links()) {
    if (phrase.src.Contains(l.src) || phrase.tgt.Contains(l.tgt)) continue;
    out.Add(shift(l.src, phrase.src), shift(l.tgt, phrase.tgt));
  }
  return out;
}

HighlightSet ExtractHighlights(const SentencePair& pair,
                               const Alignment& alignment,
                               const Scorer& scorer,
                               const ExtractorConfig& cfg) {
  cfg.Validate();
  if (pair.src.empty() || pair.tgt.empty()) {
    throw Error(ErrorCode::kEmptySide,
                "pair '" + pair.id + "' has an empty side");
  }
  for (const Link& l : alignment.links()) {
    if (l.src >= pair.src.size() || l.tgt >= pair.tgt.size()) {
      throw Error(ErrorCode::kOutOfRange,
                  "alignment link out of range for pair '" + pair.id + "'");
    }
  }

  HighlightSet result;
  result.pair_id = pair.id;
  result.masks = TokenMaskPair::AllFalse(pair);
  result.initial_score = scorer.Score(pair);
  result.final_score = result.initial_score;
  if (result.initial_score > 0.0) {
    result.stopped_by = StopReason::kInitiallyEquivalent;
    return result;
  }

  SentencePair current = pair;
  Alignment current_alignment = alignment;
  DeletionHistory history(pair.src.size(), pair.tgt.size());
  double current_score = result.initial_score;
  result.stopped_by = StopReason::kIterationLimit;

  while (result.iterations < cfg.max_iterations) {
    const PhraseTable table =
        ExtractPhrasePairs(current, current_alignment, cfg.max_phrase_len);
    const std::vector<CandidateEvaluation> candidates =
        CandidateSet(current, table, scorer, current_score, cfg);
    if (candidates.empty()) {
      result.stopped_by = StopReason::kNoCandidates;
      break;
    }
    const CandidateEvaluation& best = SelectHighlight(candidates);

    OriginalTokens tokens = RemapTokensAfterDelete(best.phrase, history);
    Highlight h;
    h.phrase = RemapSpansAfterDelete(best.phrase, history);
    h.src_tokens = std::move(tokens.src);
    h.tgt_tokens = std::move(tokens.tgt);
    h.score_del = best.score_del;
    h.objective = best.objective;
    for (std::size_t i : h.src_tokens) result.masks.src[i] = true;
    for (std::size_t j : h.tgt_tokens) result.masks.tgt[j] = true;
    result.phrases.push_back(std::move(h));

    current = DeletePhrase(current, best.phrase);
    current_alignment = RemapAlignmentAfterDelete(current_alignment, best.phrase);
    history.Apply(best.phrase);
    current_score = best.score_del;
    ++result.iterations;
    result.final_score = current_score;
    if (current_score > 0.0) {
      result.stopped_by = StopReason::kReachedEquivalence;
      break;
    }
  }
  return result;
}

std::vector<HighlightSet> ExtractCorpus(std::span<const SentencePair> pairs,
                                        std::span<const Alignment> alignments,
                                        const Scorer& scorer,
                                        const ExtractorConfig& cfg,
                                        std::size_t threads) {
  if (pairs.size() != alignments.size()) {
    throw Error(ErrorCode::kShapeError, "pairs and alignments differ in count");
  }
  std::vector<HighlightSet> results(pairs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  const auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pairs.size()) return;
      try {
        results[i] = ExtractHighlights(pairs[i], alignments[i], scorer, cfg);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(pairs.size());
        return;
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(
      1, std::min(threads, pairs.size()));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < n_workers; ++t) workers.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace divex
