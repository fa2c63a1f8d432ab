#ifndef DIVEX_IO_H_
#define DIVEX_IO_H_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "divex/baselines.h"
#include "divex/core.h"
#include "divex/eval.h"
#include "divex/extractor.h"
#include "divex/phrase_table.h"
#include "divex/scorer.h"

namespace divex {

// All record files are UTF-8, one JSON object per line.
//
// Corpus:      {"id", "src", "tgt", "src_lang", "tgt_lang", "alignment",
//               "gold_src_mask", "gold_tgt_mask", "gold_label",
//               "gold_sublabel"}
//              src/tgt are whitespace-tokenized strings or token arrays;
//              masks are arrays of 0/1 (or booleans). Only id, src and tgt
//              are required.
// Highlights:  {"id", "phrases": [{"src": [s, e], "tgt": [s, e],
//               "src_text", "tgt_text", "score_del", "objective"}],
//               "src_mask", "tgt_mask", "iterations", "stopped_by",
//               "initial_score", "final_score"}
//              Spans are in original coordinates; an empty side is [0, 0].
//              A phrase whose erased tokens are not contiguous also carries
//              "src_tokens"/"tgt_tokens" index lists.
// Masks:       {"id", "src_mask", "tgt_mask"} (highlight files qualify).
// Annotations: the AnnotationRecord fields; see AnnotationToJson.

struct CorpusInstance {
  SentencePair pair;
  std::optional<std::string> alignment;
  std::optional<TokenMaskPair> gold_masks;
  std::optional<Label> gold_label;
  std::optional<Sublabel> gold_sublabel;

  friend bool operator==(const CorpusInstance&, const CorpusInstance&) =
      default;
};

// Strict parsing; errors name the source and line. Blank lines are skipped.
std::vector<CorpusInstance> ParseCorpus(std::istream& in,
                                        std::string_view source_name);
std::vector<CorpusInstance> LoadCorpus(const std::string& path);
std::string CorpusInstanceToJson(const CorpusInstance& instance);
void WriteCorpus(const std::string& path,
                 std::span<const CorpusInstance> instances);

// Instance alignment parsed against its token lengths; nullopt if absent.
std::optional<Alignment> InstanceAlignment(const CorpusInstance& instance);

// Greedy stand-in aligner: each source token, left to right, links to the
// first unlinked target token it matches in the lexicon (or by identical
// lowercase form).
Alignment ToyAlign(const SentencePair& pair, const BilingualLexicon& lexicon);

// `pairs` supplies the surface text of each phrase and must be parallel to
// `results`.
std::string HighlightSetToJson(const HighlightSet& result,
                               const SentencePair& pair);
HighlightSet HighlightSetFromJson(std::string_view line);
void WriteHighlights(const std::string& path,
                     std::span<const HighlightSet> results,
                     std::span<const SentencePair> pairs);
std::vector<HighlightSet> ReadHighlights(const std::string& path);

struct MaskRecord {
  std::string id;
  TokenMaskPair masks;
};

std::string MaskRecordToJson(const MaskRecord& record);
void WriteMasks(const std::string& path, std::span<const MaskRecord> records);
std::vector<MaskRecord> ReadMasks(const std::string& path);

std::string AnnotationToJson(const AnnotationRecord& record);
AnnotationRecord AnnotationFromJson(std::string_view line);
void WriteAnnotations(const std::string& path,
                      std::span<const AnnotationRecord> records);
std::vector<AnnotationRecord> ReadAnnotations(const std::string& path);

// Settings shared by the command-line entry points. Exactly one scorer
// source must be selected.
struct RunConfig {
  std::string lexicon_path;    // built-in lexical scorer
  std::string scorer_command;  // external scorer over stdio
  std::string scorer_url;      // external scorer over HTTP
  std::int64_t scorer_timeout_ms = 30000;
  ExtractorConfig extractor;
  BaselineConfig baseline;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void Validate() const;
};

// The selected scorer behind a per-run cache.
std::shared_ptr<CachingScorer> MakeScorer(const RunConfig& config);

}  // namespace divex

#endif  // DIVEX_IO_H_
