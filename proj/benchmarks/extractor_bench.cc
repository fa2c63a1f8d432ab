#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "divex/extractor.h"
#include "divex/io.h"
#include "divex/scorer.h"
#include "divex/synthetic.h"

namespace divex {
namespace {

struct Prepared {
  std::vector<SentencePair> pairs;
  std::vector<Alignment> alignments;
  std::shared_ptr<LexicalScorer> scorer;
};

Prepared Prepare(const SyntheticCorpus& corpus) {
  Prepared p;
  p.scorer = std::make_shared<LexicalScorer>(corpus.lexicon);
  for (const CorpusInstance& inst : corpus.instances) {
    p.pairs.push_back(inst.pair);
    p.alignments.push_back(*InstanceAlignment(inst));
  }
  return p;
}

void BM_ExtractHighlightsMulti(benchmark::State& state) {
  const Prepared p = Prepare(MakeMultiPhraseCorpus(100, 1));
  ExtractorConfig cfg;
  cfg.use_brevity_reward = state.range(0) != 0;
  std::size_t i = 0;
  for (auto _ : state) {
    const std::size_t k = i++ % p.pairs.size();
    benchmark::DoNotOptimize(ExtractHighlights(p.pairs[k], p.alignments[k], *p.scorer, cfg));
  }
}
BENCHMARK(BM_ExtractHighlightsMulti)->Arg(1)->Arg(0);

// Full corpus through the cache, the way the CLI runs it.
void BM_ExtractCorpusCached(benchmark::State& state) {
  const Prepared p = Prepare(MakePlantedCorpus(500, 0.5, 2));
  const auto threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const CachingScorer cached(p.scorer);
    benchmark::DoNotOptimize(ExtractCorpus(p.pairs, p.alignments, cached, {}, threads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.pairs.size()));
}
BENCHMARK(BM_ExtractCorpusCached)->Arg(1)->Arg(4)->UseRealTime();

void BM_LexicalScoreBatch(benchmark::State& state) {
  const Prepared p = Prepare(MakeMultiPhraseCorpus(256, 3));
  for (auto _ : state) {
    benchmark::DoNotOptimize(p.scorer->ScoreBatch(p.pairs));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.pairs.size()));
}
BENCHMARK(BM_LexicalScoreBatch);

}  // namespace
}  // namespace divex
