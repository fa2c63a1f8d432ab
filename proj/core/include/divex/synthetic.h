#ifndef DIVEX_SYNTHETIC_H_
#define DIVEX_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "divex/io.h"
#include "divex/scorer.h"

namespace divex {

// Generated corpora over a bijective lexicon (source word "wK" translates
// to target word "vK"). Divergent material uses words outside the lexicon,
// so under the lexical scorer it is exactly what keeps a pair from scoring
// as equivalent. Every instance carries a gold alignment, gold label and
// gold masks marking the planted material.
struct SyntheticCorpus {
  BilingualLexicon lexicon;
  std::vector<CorpusInstance> instances;
};

// Equivalent pairs (full translations, target order shuffled) and divergent
// pairs with one planted phrase: either a block of unknown words on both
// sides aligned to each other, or a run of unaligned words on one side.
// The planted material outweighs the matched words so the pair scores <= 0.
// Exactly round(n_instances * divergent_fraction) pairs are divergent.
SyntheticCorpus MakePlantedCorpus(std::size_t n_instances,
                                  double divergent_fraction,
                                  std::uint64_t seed);

// Divergent pairs with two aligned divergent blocks separated by matched
// words. Erasing the smallest consistent phrase that covers both blocks
// makes the pair fully equivalent, but that phrase also sweeps up the
// matched words between them.
SyntheticCorpus MakeMultiPhraseCorpus(std::size_t n_instances,
                                      std::uint64_t seed);

// Random pairs over a small vocabulary with random alignments, used for
// property tests. Sides have between 1 and max_len tokens.
struct RandomInstance {
  SentencePair pair;
  Alignment alignment;
};

RandomInstance MakeRandomInstance(std::size_t max_len, double link_density,
                                  std::uint64_t seed);

// Lexicon covering the vocabulary of MakeRandomInstance partially.
BilingualLexicon RandomInstanceLexicon();

}  // namespace divex

#endif  // DIVEX_SYNTHETIC_H_
