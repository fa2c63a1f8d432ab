#ifndef DIVEX_EXTRACTOR_H_
#define DIVEX_EXTRACTOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "divex/core.h"
#include "divex/phrase_table.h"
#include "divex/scorer.h"

namespace divex {

struct ExtractorConfig {
  // Minimum score increase for an erasure to count as a contrast case.
  double epsilon = 0.01;
  bool use_brevity_reward = true;
  std::size_t max_iterations = 100;
  std::optional<std::size_t> max_phrase_len;

  void Validate() const;
};

struct CandidateEvaluation {
  PhrasePair phrase;
  double score_del = 0.0;  // score of the pair with `phrase` erased
  double br = 1.0;
  double objective = 0.0;
};

// e^(-p_len / pair_len) when score_del >= 0, e^(+p_len / pair_len) otherwise.
// For a fixed score_del the product score_del * BR shrinks as p_len grows.
double BrevityReward(std::size_t pair_len, std::size_t phrase_len,
                     double score_del);

// Table entries whose erasure raises the score by more than cfg.epsilon
// above `base_score`. Entries that would empty a side are skipped. All
// erasures are scored in one batch.
std::vector<CandidateEvaluation> CandidateSet(const SentencePair& pair,
                                              const PhraseTable& table,
                                              const Scorer& scorer,
                                              double base_score,
                                              const ExtractorConfig& cfg);

// Strict total order used by SelectHighlight: larger objective, then larger
// score_del, then shorter phrase, then smaller (src start, tgt start), then
// smaller (src end, tgt end).
bool PrefersCandidate(const CandidateEvaluation& a,
                      const CandidateEvaluation& b);

const CandidateEvaluation& SelectHighlight(
    const std::vector<CandidateEvaluation>& candidates);

// Erasures applied so far, each expressed in the coordinates of the pair it
// was applied to.
class DeletionHistory {
 public:
  DeletionHistory(std::size_t src_len, std::size_t tgt_len);

  // Records an erasure on the current reduced pair.
  void Apply(const PhrasePair& phrase);

  // Original index of every surviving token, per side.
  const std::vector<std::size_t>& src_index() const { return src_index_; }
  const std::vector<std::size_t>& tgt_index() const { return tgt_index_; }
  const std::vector<PhrasePair>& steps() const { return steps_; }

 private:
  std::vector<std::size_t> src_index_;
  std::vector<std::size_t> tgt_index_;
  std::vector<PhrasePair> steps_;
};

// Original token indices covered by a reduced-coordinate phrase.
struct OriginalTokens {
  std::vector<std::size_t> src;
  std::vector<std::size_t> tgt;
};

OriginalTokens RemapTokensAfterDelete(const PhrasePair& reduced,
                                      const DeletionHistory& history);

// Maps a phrase in reduced coordinates back to the original pair; each side
// becomes the minimal original span covering its surviving tokens.
PhrasePair RemapSpansAfterDelete(const PhrasePair& reduced,
                                 const DeletionHistory& history);

// Drops links touching the erased tokens and shifts the rest down.
Alignment RemapAlignmentAfterDelete(const Alignment& alignment,
                                    const PhrasePair& phrase);

// Iteratively erases the best contrast phrase until no candidate remains,
// the pair scores as equivalent, or cfg.max_iterations is reached. Returns
// an empty set when the input already scores as equivalent.
HighlightSet ExtractHighlights(const SentencePair& pair,
                               const Alignment& alignment,
                               const Scorer& scorer,
                               const ExtractorConfig& cfg = {});

// ExtractHighlights over a corpus, instances spread across `threads` worker
// threads. Output order follows the input; the first failure is rethrown.
std::vector<HighlightSet> ExtractCorpus(std::span<const SentencePair> pairs,
                                        std::span<const Alignment> alignments,
                                        const Scorer& scorer,
                                        const ExtractorConfig& cfg,
                                        std::size_t threads = 1);

}  // namespace divex

#endif  // DIVEX_EXTRACTOR_H_
