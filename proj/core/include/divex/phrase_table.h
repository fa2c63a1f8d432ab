#ifndef DIVEX_PHRASE_TABLE_H_
#define DIVEX_PHRASE_TABLE_H_

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "divex/core.h"

namespace divex {

struct Link {
  std::size_t src = 0;
  std::size_t tgt = 0;

  friend auto operator<=>(const Link&, const Link&) = default;
};

// Word alignment between the two sides of a pair. Tokens that appear in no
// link are unaligned.
class Alignment {
 public:
  Alignment() = default;
  Alignment(std::initializer_list<Link> links) : links_(links) {}
  explicit Alignment(std::set<Link> links) : links_(std::move(links)) {}

  void Add(std::size_t src, std::size_t tgt) { links_.insert({src, tgt}); }
  const std::set<Link>& links() const { return links_; }
  bool empty() const { return links_.empty(); }
  std::size_t size() const { return links_.size(); }

  // Per-token aligned flags for sides of the given lengths.
  std::vector<bool> AlignedSource(std::size_t src_len) const;
  std::vector<bool> AlignedTarget(std::size_t tgt_len) const;

  // Pharaoh "i-j" text, links in sorted order.
  std::string ToString() const;

  friend bool operator==(const Alignment&, const Alignment&) = default;

 private:
  std::set<Link> links_;
};

// Parses space-separated Pharaoh "i-j" links and range-checks each index.
Alignment ParseAlignment(std::string_view text, std::size_t src_len,
                         std::size_t tgt_len);

// Both spans must be non-empty. True iff at least one link lies inside
// src_span x tgt_span and no link leaves the box from either side.
bool IsConsistent(const Span& src_span, const Span& tgt_span,
                  const Alignment& alignment);

struct PhraseTable {
  std::string pair_id;
  std::set<PhrasePair> entries;
};

// Every two-sided phrase pair consistent with the alignment (each side at
// most `max_len` tokens when set), including the variants obtained by
// extending a pair over adjacent unaligned tokens, plus each maximal run of
// unaligned tokens on either side as a one-sided entry.
PhraseTable ExtractPhrasePairs(const SentencePair& pair,
                               const Alignment& alignment,
                               std::optional<std::size_t> max_len = {});

// Reference enumeration over every span combination. Quartic in sentence
// length; meant for testing ExtractPhrasePairs.
PhraseTable ExtractPhrasePairsBruteForce(
    const SentencePair& pair, const Alignment& alignment,
    std::optional<std::size_t> max_len = {});

}  // namespace divex

#endif  // DIVEX_PHRASE_TABLE_H_
