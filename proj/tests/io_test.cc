#include "divex/io.h"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "divex/synthetic.h"
#include "test_util.h"

namespace divex {
namespace {

using nlohmann::json;
using testing::CodeOf;
using testing::Pair;
using testing::TempDir;

std::vector<CorpusInstance> Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseCorpus(in, "mem");
}

std::string ErrorText(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(ParseCorpus, EmptyInput) { EXPECT_TRUE(Parse("").empty()); }

TEST(ParseCorpus, OneLine) {
  const auto c = Parse(
      R"({"id":"a","src":"the cat","tgt":["le","chat"],"src_lang":"en","tgt_lang":"fr",)"
      R"("alignment":"0-0 1-1","gold_src_mask":[0,1],"gold_tgt_mask":[false,true],)"
      R"("gold_label":"divergent","gold_sublabel":"changed"})"
      "\n\n");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].pair.src, (TokenList{"the", "cat"}));
  EXPECT_EQ(c[0].pair.tgt, (TokenList{"le", "chat"}));
  EXPECT_EQ(c[0].pair.src_lang, "en");
  EXPECT_EQ(c[0].alignment, "0-0 1-1");
  ASSERT_TRUE(c[0].gold_masks);
  EXPECT_EQ(c[0].gold_masks->src, (std::vector<bool>{false, true}));
  EXPECT_EQ(c[0].gold_label, Label::kDivergent);
  EXPECT_EQ(c[0].gold_sublabel, Sublabel::kChanged);
  EXPECT_EQ(InstanceAlignment(c[0]), (Alignment{{0, 0}, {1, 1}}));
}

TEST(ParseCorpus, WrongMaskLengthNamesFieldAndLine) {
  const std::string msg = ErrorText([] {
    Parse(R"({"id":"a","src":"x","tgt":"y"})"
          "\n"
          R"({"id":"b","src":"x y","tgt":"z","gold_src_mask":[1],"gold_tgt_mask":[0]})");
  });
  EXPECT_NE(msg.find("mem:2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("gold_src_mask"), std::string::npos) << msg;
}

TEST(ParseCorpus, Errors) {
  EXPECT_EQ(CodeOf([] { Parse("{not json}\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { Parse(R"({"id":"a","src":"x"})"); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { Parse(R"({"id":"a","src":"","tgt":"y"})"); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { Parse(R"({"id":"a","src":"x","tgt":"y","alignment":"0-3"})"); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { Parse(R"({"id":"a","src":"x","tgt":"y","gold_label":"same"})"); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] {
              Parse(R"({"id":"a","src":"x","tgt":"y","gold_src_mask":[2],"gold_tgt_mask":[0]})");
            }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { LoadCorpus("/nonexistent/corpus.jsonl"); }), ErrorCode::kIoError);
}

TEST(ParseCorpus, DuplicateIds) {
  EXPECT_EQ(CodeOf([] {
              Parse(R"({"id":"a","src":"x","tgt":"y"})"
                    "\n"
                    R"({"id":"a","src":"x","tgt":"y"})");
            }),
            ErrorCode::kDuplicateId);
}

TEST(Corpus, WriteReadRoundTrip) {
  TempDir dir;
  const SyntheticCorpus synth = MakePlantedCorpus(30, 0.5, 4);
  WriteCorpus(dir.File("c.jsonl"), synth.instances);
  EXPECT_EQ(LoadCorpus(dir.File("c.jsonl")), synth.instances);
}

TEST(ToyAlign, Examples) {
  const BilingualLexicon lex{{"the", "le"}, {"cat", "chat"}};
  EXPECT_EQ(ToyAlign(Pair("the cat", "le chat"), lex), (Alignment{{0, 0}, {1, 1}}));
  EXPECT_TRUE(ToyAlign(Pair("a b", "x y"), lex).empty());
  EXPECT_EQ(ToyAlign(Pair("cat cat", "chat"), lex), (Alignment{{0, 0}}));
  EXPECT_EQ(ToyAlign(Pair("cat cat", "chat le chat"), lex), (Alignment{{0, 0}, {1, 2}}));
}

HighlightSet SampleResult() {
  HighlightSet hs;
  hs.pair_id = "run";
  Highlight h{MakePhrase(1, 2, 1, 4), {1}, {1, 2, 3}, 1.0, std::exp(-4.0 / 6.0)};
  hs.phrases.push_back(h);
  hs.masks = {{false, true}, {false, true, true, true}};
  hs.initial_score = -1.0 / 3.0;
  hs.final_score = 1.0;
  hs.iterations = 1;
  hs.stopped_by = StopReason::kReachedEquivalence;
  return hs;
}

TEST(Highlights, SchemaCarriesSpansAndText) {
  const SentencePair p = Pair("the cat", "le chien noir rapide", "run");
  const json j = json::parse(HighlightSetToJson(SampleResult(), p));
  EXPECT_EQ(j["id"], "run");
  EXPECT_EQ(j["phrases"][0]["src"], json::array({1, 2}));
  EXPECT_EQ(j["phrases"][0]["tgt"], json::array({1, 4}));
  EXPECT_EQ(j["phrases"][0]["src_text"], "cat");
  EXPECT_EQ(j["phrases"][0]["tgt_text"], "chien noir rapide");
  EXPECT_FALSE(j["phrases"][0].contains("src_tokens"));
  EXPECT_EQ(j["src_mask"], json::array({false, true}));
  EXPECT_EQ(j["stopped_by"], "reached_equivalence");
  EXPECT_EQ(j["iterations"], 1);
}

TEST(Highlights, WriteReadRoundTrip) {
  TempDir dir;
  const SentencePair p = Pair("the cat", "le chien noir rapide", "run");
  std::vector<HighlightSet> results{SampleResult()};
  // A second record whose phrase skips an earlier erasure.
  HighlightSet gap;
  gap.pair_id = "gap";
  gap.phrases.push_back({MakePhrase(0, 3, 0, 0), {0, 2}, {}, 0.5, 0.4});
  gap.masks = {{true, false, true}, {false}};
  gap.initial_score = -0.5;
  gap.final_score = 0.5;
  gap.iterations = 1;
  gap.stopped_by = StopReason::kNoCandidates;
  results.push_back(gap);
  const std::vector<SentencePair> pairs{p, Pair("a b c", "x", "gap")};
  WriteHighlights(dir.File("h.jsonl"), results, pairs);
  EXPECT_EQ(ReadHighlights(dir.File("h.jsonl")), results);

  WriteHighlights(dir.File("empty.jsonl"), {}, {});
  EXPECT_TRUE(ReadHighlights(dir.File("empty.jsonl")).empty());
  std::ifstream in(dir.File("empty.jsonl"));
  EXPECT_EQ(in.peek(), std::char_traits<char>::eof());
}

TEST(Masks, RoundTripAndHighlightFiles) {
  TempDir dir;
  const std::vector<MaskRecord> masks{{"a", {{true, false}, {false}}},
                                      {"b", {{false}, {true, true}}}};
  WriteMasks(dir.File("m.jsonl"), masks);
  const std::vector<MaskRecord> back = ReadMasks(dir.File("m.jsonl"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].id, "b");
  EXPECT_EQ(back[1].masks, masks[1].masks);

  const SentencePair p = Pair("the cat", "le chien noir rapide", "run");
  WriteHighlights(dir.File("h.jsonl"), std::vector<HighlightSet>{SampleResult()},
                  std::vector<SentencePair>{p});
  EXPECT_EQ(ReadMasks(dir.File("h.jsonl"))[0].masks, SampleResult().masks);
}

TEST(Annotations, RoundTrip) {
  TempDir dir;
  AnnotationRecord r;
  r.study_id = "s";
  r.session_id = "s-0-abc";
  r.annotator_id = "ann";
  r.instance_id = "i1";
  r.condition = Condition::kWithHighlights;
  r.label = Label::kDivergent;
  r.sublabel = Sublabel::kMajor;
  r.elapsed_ms = 1234;
  r.server_elapsed_ms = 1300;
  r.received_at_ms = 1700000000000;
  r.attention_check = true;
  r.attention_passed = false;
  AnnotationRecord plain = r;
  plain.sublabel.reset();
  plain.label = Label::kEquivalent;
  plain.attention_check = false;
  plain.attention_passed.reset();
  const std::vector<AnnotationRecord> records{r, plain};
  WriteAnnotations(dir.File("a.jsonl"), records);
  EXPECT_EQ(ReadAnnotations(dir.File("a.jsonl")), records);
  EXPECT_EQ(AnnotationFromJson(AnnotationToJson(r)), r);
  EXPECT_EQ(CodeOf([] { AnnotationFromJson(R"({"study_id":"s"})"); }), ErrorCode::kParseError);
}

TEST(RunConfig, ExactlyOneScorer) {
  RunConfig cfg;
  EXPECT_EQ(CodeOf([&] { cfg.Validate(); }), ErrorCode::kInvalidArgument);
  cfg.lexicon_path = "lex.tsv";
  cfg.Validate();
  cfg.scorer_url = "http://localhost:1/score";
  EXPECT_EQ(CodeOf([&] { cfg.Validate(); }), ErrorCode::kInvalidArgument);
}

TEST(RunConfig, MakeScorerWrapsTheLexicon) {
  TempDir dir;
  std::ofstream(dir.File("lex.tsv")) << "the\tle\ncat\tchat\n";
  RunConfig cfg;
  cfg.lexicon_path = dir.File("lex.tsv");
  const auto scorer = MakeScorer(cfg);
  EXPECT_EQ(scorer->Score(Pair("the cat", "le chat")), 1.0);
  EXPECT_EQ(scorer->misses(), 1u);
}

}  // namespace
}  // namespace divex
