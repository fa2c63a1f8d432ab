#include "divex/external_scorer.h"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "divex/synthetic.h"
#include "test_util.h"

namespace divex {
namespace {

using namespace std::chrono_literals;
using testing::CodeOf;
using testing::Pair;
using testing::TempDir;

const BilingualLexicon kLex{{"the", "le"}, {"cat", "chat"}};

std::vector<SentencePair> SampleBatch() {
  return {Pair("the cat", "le chat"), Pair("the cat", "le chien noir rapide"),
          Pair("a", "b"), Pair("the cat", "le chat")};
}

std::string WriteLexicon(const TempDir& dir) {
  const std::string path = dir.File("lex.tsv");
  std::ofstream(path) << kLex.Serialize();
  return path;
}

std::string StubCommand(const std::string& lexicon) {
  return std::string(DIVEX_CLI_PATH) + " score --lexicon " + lexicon;
}

TEST(WireFormat, RequestRoundTrip) {
  const SentencePair p = Pair("l'\xC3\xA9t\xC3\xA9 \"quoted\"", "x\\y");
  const ScoreRequest r = DecodeScoreRequest(EncodeScoreRequest("7", p));
  EXPECT_EQ(r.id, "7");
  EXPECT_EQ(r.pair.src, p.src);
  EXPECT_EQ(r.pair.tgt, p.tgt);
}

TEST(WireFormat, ResponseRoundTrip) {
  const ScoreResponse r = DecodeScoreResponse(EncodeScoreResponse("3", -0.125));
  EXPECT_EQ(r.id, "3");
  EXPECT_EQ(r.score, -0.125);
}

TEST(WireFormat, MalformedResponseNamesTheLine) {
  for (const char* line : {"not json", "{\"id\":\"1\"}", "{\"id\":1,\"score\":0}",
                           "{\"id\":\"1\",\"score\":\"high\"}", "[1,2]"}) {
    try {
      DecodeScoreResponse(line);
      ADD_FAILURE() << line;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kProtocolError);
      EXPECT_NE(std::string(e.what()).find(line), std::string::npos) << e.what();
    }
  }
}

TEST(ServeScoreStream, AnswersEachBatch) {
  const LexicalScorer scorer(kLex);
  std::istringstream in(EncodeScoreRequest("a", Pair("the cat", "le chat")) + "\n" +
                        EncodeScoreRequest("b", Pair("a", "b")) + "\n\n" +
                        EncodeScoreRequest("c", Pair("the", "le")) + "\n\n");
  std::ostringstream out;
  ServeScoreStream(in, out, scorer);
  std::istringstream lines(out.str());
  std::vector<std::string> got;
  for (std::string line; std::getline(lines, line);) got.push_back(line);
  ASSERT_EQ(got.size(), 5u);
  EXPECT_EQ(DecodeScoreResponse(got[0]).id, "a");
  EXPECT_EQ(DecodeScoreResponse(got[0]).score, 1.0);
  EXPECT_EQ(DecodeScoreResponse(got[1]).score, -1.0);
  EXPECT_EQ(got[2], "");
  EXPECT_EQ(DecodeScoreResponse(got[3]).id, "c");
  EXPECT_EQ(got[4], "");
}

TEST(SubprocessScorer, MatchesInProcessScores) {
  TempDir dir;
  SubprocessScorer wire(StubCommand(WriteLexicon(dir)), 10s);
  const std::vector<SentencePair> batch = SampleBatch();
  EXPECT_EQ(wire.ScoreBatch(batch), LexicalScorer(kLex).ScoreBatch(batch));
  EXPECT_EQ(wire.ScoreBatch(batch), LexicalScorer(kLex).ScoreBatch(batch));
  EXPECT_EQ(wire.wire_calls(), 2u);
  EXPECT_EQ(wire.wire_pairs(), 8u);
  EXPECT_TRUE(wire.ScoreBatch({}).empty());
  EXPECT_EQ(wire.wire_calls(), 2u);
}

TEST(SubprocessScorer, MalformedReplyIsProtocolError) {
  SubprocessScorer wire("while read l; do [ -z \"$l\" ] && printf 'oops\\n\\n'; done", 5s);
  EXPECT_EQ(CodeOf([&] { wire.Score(Pair("a", "b")); }), ErrorCode::kProtocolError);
}

TEST(SubprocessScorer, ShortReplyIsLengthMismatch) {
  SubprocessScorer wire(
      "while read l; do [ -z \"$l\" ] && printf '{\"id\":\"0\",\"score\":1}\\n\\n'; done",
      5s);
  EXPECT_EQ(CodeOf([&] { wire.ScoreBatch(SampleBatch()); }), ErrorCode::kLengthMismatch);
}

TEST(SubprocessScorer, UnknownIdIsProtocolError) {
  SubprocessScorer wire(
      "while read l; do [ -z \"$l\" ] && printf '{\"id\":\"9\",\"score\":1}\\n\\n'; done",
      5s);
  EXPECT_EQ(CodeOf([&] { wire.Score(Pair("a", "b")); }), ErrorCode::kProtocolError);
}

TEST(SubprocessScorer, SilentProcessTimesOut) {
  SubprocessScorer wire("sleep 30", 200ms);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(CodeOf([&] { wire.Score(Pair("a", "b")); }), ErrorCode::kTimeout);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
}

TEST(SubprocessScorer, ExitedProcessIsReported) {
  SubprocessScorer wire("exit 0", 2s);
  const ErrorCode code = CodeOf([&] { wire.Score(Pair("a", "b")); });
  EXPECT_TRUE(code == ErrorCode::kProtocolError || code == ErrorCode::kIoError)
      << ErrorCodeName(code);
}

TEST(SubprocessScorer, RecoversAfterFailure) {
  TempDir dir;
  const std::string lex = WriteLexicon(dir);
  // Fails the first time (flag file absent), serves normally afterwards.
  const std::string flag = dir.File("started");
  const std::string cmd = "if [ -e " + flag + " ]; then exec " + StubCommand(lex) +
                          "; else touch " + flag + "; exit 1; fi";
  SubprocessScorer wire(cmd, 5s);
  EXPECT_THROW(wire.Score(Pair("a", "b")), Error);
  EXPECT_EQ(wire.Score(Pair("the cat", "le chat")), 1.0);
}

TEST(SubprocessScorer, LargeBatchDoesNotDeadlock) {
  TempDir dir;
  SubprocessScorer wire(StubCommand(WriteLexicon(dir)), 30s);
  std::vector<SentencePair> batch;
  for (std::uint64_t k = 0; k < 5000; ++k) batch.push_back(MakeRandomInstance(8, 0.3, k).pair);
  EXPECT_EQ(wire.ScoreBatch(batch), LexicalScorer(kLex).ScoreBatch(batch));
}

TEST(HttpScorer, MatchesInProcessScores) {
  ScoreHttpServer server(std::make_shared<LexicalScorer>(kLex));
  const int port = server.Start("127.0.0.1", 0);
  HttpScorer wire("http://127.0.0.1:" + std::to_string(port) + "/score", 10s);
  const std::vector<SentencePair> batch = SampleBatch();
  EXPECT_EQ(wire.ScoreBatch(batch), LexicalScorer(kLex).ScoreBatch(batch));
  EXPECT_EQ(wire.wire_calls(), 1u);
  server.Stop();
}

TEST(HttpScorer, DefaultPathIsScore) {
  ScoreHttpServer server(std::make_shared<LexicalScorer>(kLex));
  const int port = server.Start("127.0.0.1", 0);
  HttpScorer wire("http://127.0.0.1:" + std::to_string(port), 10s);
  EXPECT_EQ(wire.Score(Pair("the cat", "le chat")), 1.0);
}

TEST(HttpScorer, UnreachableEndpointIsAnError) {
  HttpScorer wire("http://127.0.0.1:1/score", 1s);
  const ErrorCode code = CodeOf([&] { wire.Score(Pair("a", "b")); });
  EXPECT_TRUE(code == ErrorCode::kIoError || code == ErrorCode::kTimeout);
}

TEST(HttpScorer, ServerErrorIsProtocolError) {
  class Failing : public Scorer {
   public:
    std::vector<double> ScoreBatch(std::span<const SentencePair>) const override {
      throw Error(ErrorCode::kProtocolError, "model unavailable");
    }
  };
  ScoreHttpServer server(std::make_shared<Failing>());
  const int port = server.Start("127.0.0.1", 0);
  HttpScorer wire("http://127.0.0.1:" + std::to_string(port) + "/score", 5s);
  EXPECT_EQ(CodeOf([&] { wire.Score(Pair("a", "b")); }), ErrorCode::kProtocolError);
}

TEST(CachingWireScorer, DuplicatePairsCostOneWireCall) {
  TempDir dir;
  auto wire = std::make_shared<SubprocessScorer>(StubCommand(WriteLexicon(dir)), 10s);
  CachingScorer cache(wire);
  const SentencePair p = Pair("the cat", "le chien");
  cache.ScoreBatch(std::vector<SentencePair>{p, p, p});
  cache.Score(p);
  EXPECT_EQ(wire->wire_calls(), 1u);
  EXPECT_EQ(wire->wire_pairs(), 1u);
}

TEST(MakeWireScorer, RejectsEmptyTarget) {
  ExternalScorerConfig cfg;
  EXPECT_EQ(CodeOf([&] { MakeWireScorer(cfg); }), ErrorCode::kInvalidArgument);
  cfg.transport = ExternalScorerConfig::Transport::kHttp;
  EXPECT_EQ(CodeOf([&] { MakeWireScorer(cfg); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace divex
