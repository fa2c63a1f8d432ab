#include "divex/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "divex/random.h"

namespace divex {

namespace {

constexpr std::size_t kVocabulary = 500;

std::string SourceWord(std::size_t k) { return "w" + std::to_string(k); }
std::string TargetWord(std::size_t k) { return "v" + std::to_string(k); }

BilingualLexicon BijectiveLexicon() {
  BilingualLexicon lexicon;
  for (std::size_t k = 0; k < kVocabulary; ++k) {
    lexicon.Add(SourceWord(k), TargetWord(k));
  }
  return lexicon;
}

template <typename T>
void Shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[UniformIndex(rng, i)]);
  }
}

// Distinct vocabulary indices.
std::vector<std::size_t> DrawWords(std::size_t count, Rng& rng) {
  std::vector<std::size_t> words;
  while (words.size() < count) {
    const std::size_t k = UniformIndex(rng, kVocabulary);
    if (std::find(words.begin(), words.end(), k) == words.end()) {
      words.push_back(k);
    }
  }
  return words;
}

// Incrementally assembled instance. Tokens are appended per side; `gold`
// flags mark planted tokens.
struct Builder {
  SentencePair pair;
  Alignment alignment;
  std::vector<bool> src_gold;
  std::vector<bool> tgt_gold;
  std::size_t unknown = 0;

  std::size_t AddSource(std::string token, bool gold) {
    pair.src.push_back(std::move(token));
    src_gold.push_back(gold);
    return pair.src.size() - 1;
  }
  std::size_t AddTarget(std::string token, bool gold) {
    pair.tgt.push_back(std::move(token));
    tgt_gold.push_back(gold);
    return pair.tgt.size() - 1;
  }
  std::string UnknownSource() { return "xs" + std::to_string(unknown++); }
  std::string UnknownTarget() { return "yt" + std::to_string(unknown++); }

  // a x b block of unknown words, every source word linked to every target
  // word of the block.
  void AddBlock(std::size_t a, std::size_t b) {
    std::vector<std::size_t> s_idx, t_idx;
    for (std::size_t i = 0; i < a; ++i) s_idx.push_back(AddSource(UnknownSource(), true));
    for (std::size_t j = 0; j < b; ++j) t_idx.push_back(AddTarget(UnknownTarget(), true));
    for (std::size_t i : s_idx) {
      for (std::size_t j : t_idx) alignment.Add(i, j);
    }
  }

  CorpusInstance Finish(std::string id, Label label) {
    pair.id = std::move(id);
    pair.src_lang = "xx";
    pair.tgt_lang = "yy";
    CorpusInstance inst;
    inst.pair = std::move(pair);
    inst.alignment = alignment.ToString();
    inst.gold_masks = TokenMaskPair{std::move(src_gold), std::move(tgt_gold)};
    inst.gold_label = label;
    return inst;
  }
};

// Appends matched words in source order; the target side receives them in
// `tgt_order` (a permutation of 0..words.size()-1) and links are recorded.
void AddMatched(Builder& b, const std::vector<std::size_t>& words,
                const std::vector<std::size_t>& tgt_order) {
  std::vector<std::size_t> s_idx;
  for (std::size_t k : words) s_idx.push_back(b.AddSource(SourceWord(k), false));
  for (std::size_t pos : tgt_order) {
    const std::size_t j = b.AddTarget(TargetWord(words[pos]), false);
    b.alignment.Add(s_idx[pos], j);
  }
}

std::vector<std::size_t> Identity(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

CorpusInstance PlantedEquivalent(std::string id, Rng& rng) {
  const std::size_t n = UniformInRange(rng, 2, 7);
  const std::vector<std::size_t> words = DrawWords(n, rng);
  std::vector<std::size_t> order = Identity(n);
  Shuffle(order, rng);
  Builder b;
  AddMatched(b, words, order);
  return b.Finish(std::move(id), Label::kEquivalent);
}

CorpusInstance PlantedDivergent(std::string id, Rng& rng) {
  const std::size_t n = UniformInRange(rng, 1, 3);
  const std::vector<std::size_t> words = DrawWords(n, rng);
  const std::size_t kind = UniformIndex(rng, 3);  // 0 block, 1 src run, 2 tgt run
  std::size_t a = 0;
  std::size_t b_len = 0;
  if (kind == 0) {
    do {
      a = UniformInRange(rng, 1, 4);
      b_len = UniformInRange(rng, 1, 4);
    } while (a + b_len < 2 * n);
  } else {
    a = UniformInRange(rng, 2 * n, 2 * n + 2);
  }
  // Planted material goes between the first `cut` matched words and the
  // rest, on both sides; matched words keep their order.
  const std::size_t cut_src = UniformInRange(rng, 0, n);
  const std::size_t cut_tgt = UniformInRange(rng, 0, n);

  Builder b;
  std::vector<std::size_t> s_idx(n), t_idx(n);
  std::vector<std::size_t> planted_src, planted_tgt;
  for (std::size_t i = 0; i <= n; ++i) {
    if (i == cut_src) {
      const std::size_t count = kind == 2 ? 0 : a;
      for (std::size_t r = 0; r < count; ++r) {
        planted_src.push_back(b.AddSource(b.UnknownSource(), true));
      }
    }
    if (i < n) s_idx[i] = b.AddSource(SourceWord(words[i]), false);
  }
  for (std::size_t j = 0; j <= n; ++j) {
    if (j == cut_tgt) {
      const std::size_t count = kind == 0 ? b_len : (kind == 2 ? a : 0);
      for (std::size_t r = 0; r < count; ++r) {
        planted_tgt.push_back(b.AddTarget(b.UnknownTarget(), true));
      }
    }
    if (j < n) t_idx[j] = b.AddTarget(TargetWord(words[j]), false);
  }
  for (std::size_t i = 0; i < n; ++i) b.alignment.Add(s_idx[i], t_idx[i]);
  if (kind == 0) {
    for (std::size_t i : planted_src) {
      for (std::size_t j : planted_tgt) b.alignment.Add(i, j);
    }
  }
  return b.Finish(std::move(id), Label::kDivergent);
}

}  // namespace

SyntheticCorpus MakePlantedCorpus(std::size_t n_instances,
                                  double divergent_fraction,
                                  std::uint64_t seed) {
  SyntheticCorpus corpus{BijectiveLexicon(), {}};
  const double fraction = std::clamp(divergent_fraction, 0.0, 1.0);
  const auto n_divergent = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n_instances)));
  // Fisher-Yates over instance positions; the first n_divergent are planted.
  std::vector<std::size_t> order(n_instances);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng placement(SplitSeed(seed, ~std::uint64_t{0}));
  for (std::size_t i = n_instances; i > 1; --i) {
    std::swap(order[i - 1], order[UniformIndex(placement, i)]);
  }
  std::vector<bool> divergent(n_instances, false);
  for (std::size_t k = 0; k < n_divergent; ++k) divergent[order[k]] = true;

  for (std::size_t i = 0; i < n_instances; ++i) {
    Rng rng(SplitSeed(seed, i));
    std::string id = "planted-" + std::to_string(i);
    if (divergent[i]) {
      corpus.instances.push_back(PlantedDivergent(std::move(id), rng));
    } else {
      corpus.instances.push_back(PlantedEquivalent(std::move(id), rng));
    }
  }
  return corpus;
}

SyntheticCorpus MakeMultiPhraseCorpus(std::size_t n_instances,
                                      std::uint64_t seed) {
  SyntheticCorpus corpus{BijectiveLexicon(), {}};
  for (std::size_t i = 0; i < n_instances; ++i) {
    Rng rng(SplitSeed(seed, i));
    // A large block, a small block and k matched words between them, plus
    // `outer` matched words at the edges. Enough divergent material to keep
    // the pair at or below zero.
    const std::size_t k = UniformInRange(rng, 2, 5);
    const std::size_t outer = UniformInRange(rng, 1, 3);
    const std::size_t n = k + outer;
    const std::size_t small = UniformInRange(rng, 1, 2);
    std::size_t large = UniformInRange(rng, 3, 6);
    while (2 * large + 2 * small < 2 * n) ++large;
    const std::vector<std::size_t> words = DrawWords(n, rng);
    const std::size_t left = UniformInRange(rng, 0, outer);
    const bool large_first = UniformIndex(rng, 2) == 0;

    Builder b;
    const auto matched = [&](std::size_t from, std::size_t to) {
      const std::vector<std::size_t> slice(words.begin() + static_cast<std::ptrdiff_t>(from),
                                           words.begin() + static_cast<std::ptrdiff_t>(to));
      // Target order is shuffled within the slice only, so the region
      // between the blocks stays closed under the alignment.
      std::vector<std::size_t> order = Identity(slice.size());
      Shuffle(order, rng);
      AddMatched(b, slice, order);
    };
    // Each segment appends to both sides at once, so the segment boundaries
    // line up across sides.
    matched(0, left);
    b.AddBlock(large_first ? large : small, large_first ? large : small);
    matched(left, left + k);
    b.AddBlock(large_first ? small : large, large_first ? small : large);
    matched(left + k, n);
    corpus.instances.push_back(
        b.Finish("multi-" + std::to_string(i), Label::kDivergent));
  }
  return corpus;
}

RandomInstance MakeRandomInstance(std::size_t max_len, double link_density,
                                  std::uint64_t seed) {
  Rng rng(seed);
  RandomInstance out;
  const std::size_t ns = UniformInRange(rng, 1, max_len);
  const std::size_t nt = UniformInRange(rng, 1, max_len);
  out.pair.id = "random-" + std::to_string(seed);
  for (std::size_t i = 0; i < ns; ++i) {
    out.pair.src.push_back("a" + std::to_string(UniformIndex(rng, 6)));
  }
  for (std::size_t j = 0; j < nt; ++j) {
    out.pair.tgt.push_back("b" + std::to_string(UniformIndex(rng, 6)));
  }
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nt; ++j) {
      if (UniformUnit(rng) < link_density) out.alignment.Add(i, j);
    }
  }
  return out;
}

BilingualLexicon RandomInstanceLexicon() {
  BilingualLexicon lexicon;
  for (std::size_t k = 0; k < 4; ++k) {
    lexicon.Add("a" + std::to_string(k), "b" + std::to_string(k));
  }
  return lexicon;
}

}  // namespace divex
