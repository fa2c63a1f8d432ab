#ifndef DIVEX_CORE_H_
#define DIVEX_CORE_H_

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "divex/error.h"

namespace divex {

using Token = std::string;
using TokenList = std::vector<Token>;

enum class Side { kSource, kTarget };

// A bilingual input instance. Tokens are opaque surface strings.
struct SentencePair {
  std::string id;
  std::string src_lang;
  std::string tgt_lang;
  TokenList src;
  TokenList tgt;

  std::size_t TotalLength() const { return src.size() + tgt.size(); }

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

// Half-open token range [start, end) on one side of a pair. Empty spans are
// canonicalized to [0, 0) so that PhrasePair equality is structural.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool empty() const { return start == end; }
  bool Contains(std::size_t index) const {
    return index >= start && index < end;
  }

  friend auto operator<=>(const Span&, const Span&) = default;
};

// A contiguous source span and/or a contiguous target span. One side may be
// empty (an unaligned, one-sided phrase), never both.
struct PhrasePair {
  Span src;
  Span tgt;

  std::size_t length() const { return src.length() + tgt.length(); }
  bool IsOneSided() const { return src.empty() != tgt.empty(); }

  friend auto operator<=>(const PhrasePair&, const PhrasePair&) = default;
};

PhrasePair MakePhrase(std::size_t src_start, std::size_t src_end,
                      std::size_t tgt_start, std::size_t tgt_end);
PhrasePair SourceOnly(std::size_t start, std::size_t end);
PhrasePair TargetOnly(std::size_t start, std::size_t end);

struct TokenMaskPair {
  std::vector<bool> src;
  std::vector<bool> tgt;

  std::size_t CountTrue() const;
  static TokenMaskPair AllFalse(const SentencePair& pair);

  friend bool operator==(const TokenMaskPair&, const TokenMaskPair&) = default;
};

// Why the iterative extraction loop ended.
enum class StopReason {
  kInitiallyEquivalent,
  kNoCandidates,
  kReachedEquivalence,
  kIterationLimit,
};

std::string_view StopReasonName(StopReason reason);
StopReason ParseStopReason(std::string_view name);

// One extracted highlight. `phrase` is the minimal covering span in original
// coordinates; `src_tokens`/`tgt_tokens` list exactly the original tokens that
// were erased, which differ from the covering span only when an earlier
// erasure left a gap inside it.
struct Highlight {
  PhrasePair phrase;
  std::vector<std::size_t> src_tokens;
  std::vector<std::size_t> tgt_tokens;
  double score_del = 0.0;
  double objective = 0.0;

  friend bool operator==(const Highlight&, const Highlight&) = default;
};

struct HighlightSet {
  std::string pair_id;
  std::vector<Highlight> phrases;
  TokenMaskPair masks;
  double initial_score = 0.0;
  double final_score = 0.0;
  std::size_t iterations = 0;
  StopReason stopped_by = StopReason::kNoCandidates;

  friend bool operator==(const HighlightSet&, const HighlightSet&) = default;
};

enum class TokenizeMode { kWhitespace, kPretokenized };

// Splits `text` into tokens. Whitespace mode splits on any Unicode white
// space (UTF-8 input); pretokenized mode splits on single ASCII spaces.
TokenList Tokenize(std::string_view text,
                   TokenizeMode mode = TokenizeMode::kWhitespace);

std::string JoinTokens(const TokenList& tokens);

// Erases `phrase` from both sides of `pair`. The input is left unchanged.
SentencePair DeletePhrase(const SentencePair& pair, const PhrasePair& phrase);

// Validates that `phrase` lies inside `pair` and is not empty on both sides.
void CheckPhraseFits(const SentencePair& pair, const PhrasePair& phrase);

// Union of every highlight's erased tokens, per side.
TokenMaskPair MasksFromHighlights(const SentencePair& pair,
                                  const HighlightSet& highlights);

}  // namespace divex

#endif  // DIVEX_CORE_H_
