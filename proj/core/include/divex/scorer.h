#ifndef DIVEX_SCORER_H_
#define DIVEX_SCORER_H_

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "divex/core.h"

namespace divex {

// Divergence ranker contract. Scores are finite; a score > 0 means the pair
// is treated as equivalent, <= 0 as divergent, and larger is more
// equivalent. Implementations must be callable from several threads.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // One score per pair, in input order. Every pair must have two non-empty
  // sides.
  virtual std::vector<double> ScoreBatch(
      std::span<const SentencePair> pairs) const = 0;

  double Score(const SentencePair& pair) const;
};

std::string ToLowerAscii(std::string_view text);

// Set of lowercase (source word, target word) translation entries.
class BilingualLexicon {
 public:
  BilingualLexicon() = default;
  BilingualLexicon(
      std::initializer_list<std::pair<std::string_view, std::string_view>>
          entries);

  void Add(std::string_view src, std::string_view tgt);

  // True if the entry exists or the two words are equal after lowercasing.
  bool Matches(std::string_view src, std::string_view tgt) const;

  std::size_t size() const { return entries_.size(); }

  // One entry per line: two fields separated by a tab or spaces. Blank
  // lines and lines starting with '#' are ignored.
  static BilingualLexicon Load(const std::string& path);
  static BilingualLexicon Parse(std::string_view text);
  // Inverse of Parse: one tab-separated entry per line, sorted.
  std::string Serialize() const;

 private:
  std::set<std::pair<std::string, std::string>, std::less<>> entries_;
};

// Greedy lexical overlap score in [-1, 1]: with M matched token pairs,
// (4M - Ns - Nt) / (Ns + Nt). Each source token, left to right, claims the
// first unclaimed target token it matches.
double LexicalScore(const SentencePair& pair, const BilingualLexicon& lexicon);

class LexicalScorer : public Scorer {
 public:
  explicit LexicalScorer(BilingualLexicon lexicon)
      : lexicon_(std::move(lexicon)) {}

  std::vector<double> ScoreBatch(
      std::span<const SentencePair> pairs) const override;

  const BilingualLexicon& lexicon() const { return lexicon_; }

 private:
  BilingualLexicon lexicon_;
};

// Memoizes an inner scorer on the exact token sequences of both sides.
// Cache misses inside one batch are de-duplicated and forwarded to the
// inner scorer as a single batch.
class CachingScorer : public Scorer {
 public:
  explicit CachingScorer(std::shared_ptr<const Scorer> inner)
      : inner_(std::move(inner)) {}

  std::vector<double> ScoreBatch(
      std::span<const SentencePair> pairs) const override;

  std::size_t hits() const;
  std::size_t misses() const;
  const Scorer& inner() const { return *inner_; }

 private:
  using Key = std::pair<TokenList, TokenList>;

  std::shared_ptr<const Scorer> inner_;
  mutable std::mutex mu_;
  mutable std::map<Key, double> cache_;
  mutable std::size_t hits_ = 0;
  mutable std::size_t misses_ = 0;
};

}  // namespace divex

#endif  // DIVEX_SCORER_H_
