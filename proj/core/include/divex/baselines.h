#ifndef DIVEX_BASELINES_H_
#define DIVEX_BASELINES_H_

#include <cstdint>
#include <string_view>

#include "divex/core.h"
#include "divex/scorer.h"

namespace divex {

enum class BaselineKind { kRandom, kLeaveOneOut };

std::string_view BaselineKindName(BaselineKind kind);
BaselineKind ParseBaselineKind(std::string_view name);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kRandom;
  double probability = 0.5;
  double threshold = 0.0;
  std::uint64_t seed = 0;
};

// Marks every token independently with `probability`. Tokens are visited
// source first, then target; token k is marked iff UniformUnit(rng) <
// probability, with rng = Rng(seed).
TokenMaskPair RandomHighlight(const SentencePair& pair, double probability,
                              std::uint64_t seed);

// Marks token k iff R(pair without k) - R(pair) > threshold. Both sides need
// at least two tokens. All single-token erasures are scored in one batch.
TokenMaskPair LeaveOneOut(const SentencePair& pair, const Scorer& scorer,
                          double threshold = 0.0);

// Runs the configured baseline. For random masks the per-instance seed is
// SplitSeed(cfg.seed, instance_index).
TokenMaskPair RunBaseline(const SentencePair& pair, std::size_t instance_index,
                          const Scorer* scorer, const BaselineConfig& cfg);

}  // namespace divex

#endif  // DIVEX_BASELINES_H_
