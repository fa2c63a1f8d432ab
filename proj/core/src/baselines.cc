#include "divex/baselines.h"

#include <string>
#include <vector>

#include "divex/random.h"

namespace divex {

std::string_view BaselineKindName(BaselineKind kind) {
  return kind == BaselineKind::kRandom ? "random" : "loo";
}

BaselineKind ParseBaselineKind(std::string_view name) {
  if (name == "random") return BaselineKind::kRandom;
  if (name == "loo" || name == "leave_one_out") return BaselineKind::kLeaveOneOut;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown baseline kind '" + std::string(name) + "'");
}

TokenMaskPair RandomHighlight(const SentencePair& pair, double probability,
                              std::uint64_t seed) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "probability must be in [0, 1]");
  }
  Rng rng(seed);
  TokenMaskPair masks = TokenMaskPair::AllFalse(pair);
  for (std::size_t i = 0; i < masks.src.size(); ++i) {
    masks.src[i] = UniformUnit(rng) < probability;
  }
  for (std::size_t j = 0; j < masks.tgt.size(); ++j) {
    masks.tgt[j] = UniformUnit(rng) < probability;
  }
  return masks;
}

TokenMaskPair LeaveOneOut(const SentencePair& pair, const Scorer& scorer,
                          double threshold) {
  if (pair.src.size() < 2 || pair.tgt.size() < 2) {
    throw Error(ErrorCode::kSideTooShort,
                "leave-one-out needs two tokens per side in pair '" + pair.id +
                    "'");
  }
  std::vector<SentencePair> batch;
  batch.reserve(pair.TotalLength() + 1);
  batch.push_back(pair);
  for (std::size_t i = 0; i < pair.src.size(); ++i) {
    batch.push_back(DeletePhrase(pair, SourceOnly(i, i + 1)));
  }
  for (std::size_t j = 0; j < pair.tgt.size(); ++j) {
    batch.push_back(DeletePhrase(pair, TargetOnly(j, j + 1)));
  }
  const std::vector<double> scores = scorer.ScoreBatch(batch);
  const double base = scores[0];

  TokenMaskPair masks = TokenMaskPair::AllFalse(pair);
  std::size_t k = 1;
  for (std::size_t i = 0; i < masks.src.size(); ++i, ++k) {
    masks.src[i] = scores[k] - base > threshold;
  }
  for (std::size_t j = 0; j < masks.tgt.size(); ++j, ++k) {
    masks.tgt[j] = scores[k] - base > threshold;
  }
  return masks;
}

TokenMaskPair RunBaseline(const SentencePair& pair, std::size_t instance_index,
                          const Scorer* scorer, const BaselineConfig& cfg) {
  if (cfg.kind == BaselineKind::kRandom) {
    return RandomHighlight(pair, cfg.probability,
                           SplitSeed(cfg.seed, instance_index));
  }
  if (scorer == nullptr) {
    throw Error(ErrorCode::kInvalidArgument,
                "leave-one-out baseline needs a scorer");
  }
  return LeaveOneOut(pair, *scorer, cfg.threshold);
}

}  // namespace divex
