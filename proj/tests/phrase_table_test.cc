#include "divex/phrase_table.h"

#include <gtest/gtest.h>

#include "divex/synthetic.h"
#include "test_util.h"

namespace divex {
namespace {

using testing::BoxOf;
using testing::CodeOf;
using testing::LinksOf;
using testing::Pair;

std::set<oracle::Box> Boxes(const PhraseTable& table) {
  std::set<oracle::Box> out;
  for (const PhrasePair& p : table.entries) out.insert(BoxOf(p));
  return out;
}

TEST(ParseAlignment, ParsesLinks) {
  const Alignment a = ParseAlignment("0-0 1-2", 2, 3);
  EXPECT_EQ(a, (Alignment{{0, 0}, {1, 2}}));
  EXPECT_EQ(a.ToString(), "0-0 1-2");
}

TEST(ParseAlignment, EmptyTextIsEmptyAlignment) {
  EXPECT_TRUE(ParseAlignment("", 2, 3).empty());
  EXPECT_TRUE(ParseAlignment("   ", 2, 3).empty());
}

TEST(ParseAlignment, DuplicatesCollapse) {
  EXPECT_EQ(ParseAlignment("1-1 1-1", 2, 2).size(), 1u);
}

TEST(ParseAlignment, RejectsBadLinks) {
  EXPECT_EQ(CodeOf([] { ParseAlignment("0-5", 2, 3); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ParseAlignment("2-0", 2, 3); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ParseAlignment("0:1", 2, 3); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ParseAlignment("0-", 2, 3); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ParseAlignment("-1-0", 2, 3); }), ErrorCode::kParseError);
}

TEST(ParseAlignment, ErrorNamesOffendingToken) {
  try {
    ParseAlignment("0-0 7-1", 2, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("7-1"), std::string::npos);
  }
}

TEST(IsConsistent, SingleLink) {
  EXPECT_TRUE(IsConsistent({0, 1}, {0, 1}, Alignment{{0, 0}}));
}

TEST(IsConsistent, EscapingLinkBreaksConsistency) {
  EXPECT_FALSE(IsConsistent({0, 1}, {0, 1}, Alignment{{0, 0}, {0, 1}}));
}

TEST(IsConsistent, CrossingLinksContained) {
  EXPECT_TRUE(IsConsistent({0, 2}, {0, 2}, Alignment{{0, 1}, {1, 0}}));
}

TEST(IsConsistent, NeedsALinkInside) {
  EXPECT_FALSE(IsConsistent({1, 2}, {1, 2}, Alignment{{0, 0}}));
}

TEST(ExtractPhrasePairs, MinimalInstance) {
  const PhraseTable t = ExtractPhrasePairs(Pair("a", "x"), Alignment{{0, 0}});
  EXPECT_EQ(Boxes(t), (std::set<oracle::Box>{{0, 1, 0, 1}}));
}

TEST(ExtractPhrasePairs, UnalignedAttachmentAndRun) {
  const PhraseTable t = ExtractPhrasePairs(Pair("a b", "x"), Alignment{{0, 0}});
  EXPECT_EQ(Boxes(t),
            (std::set<oracle::Box>{{0, 1, 0, 1}, {0, 2, 0, 1}, {1, 2, 0, 0}}));
}

TEST(ExtractPhrasePairs, CrossingAlignmentTable) {
  const SentencePair p = Pair("a b c", "x y z");
  const Alignment a{{0, 0}, {1, 2}, {2, 1}};
  const std::set<oracle::Box> expected{
      {0, 1, 0, 1}, {1, 2, 2, 3}, {2, 3, 1, 2}, {1, 3, 1, 3}, {0, 3, 0, 3}};
  EXPECT_EQ(Boxes(ExtractPhrasePairs(p, a)), expected);
  EXPECT_EQ(Boxes(ExtractPhrasePairsBruteForce(p, a)), expected);
}

TEST(ExtractPhrasePairs, EmptyAlignmentGivesOneRunPerSide) {
  const PhraseTable t = ExtractPhrasePairs(Pair("a b c", "x y"), Alignment{});
  EXPECT_EQ(Boxes(t), (std::set<oracle::Box>{{0, 3, 0, 0}, {0, 0, 0, 2}}));
  EXPECT_EQ(Boxes(ExtractPhrasePairsBruteForce(Pair("a b c", "x y"), Alignment{})),
            Boxes(t));
}

TEST(ExtractPhrasePairs, MaxLenCapsTwoSidedEntries) {
  const SentencePair p = Pair("a b c", "x y z");
  const Alignment a{{0, 0}, {1, 1}, {2, 2}};
  const PhraseTable t = ExtractPhrasePairs(p, a, 2);
  for (const PhrasePair& e : t.entries) {
    EXPECT_LE(e.src.length(), 2u);
    EXPECT_LE(e.tgt.length(), 2u);
  }
  EXPECT_EQ(t.entries.size(), 5u);  // 3 single tokens + 2 adjacent pairs
}

TEST(ExtractPhrasePairs, DiagonalWithMaxLenOneIsIdentity) {
  for (std::size_t n = 1; n <= 8; ++n) {
    SentencePair p;
    Alignment a;
    for (std::size_t i = 0; i < n; ++i) {
      p.src.push_back("s" + std::to_string(i));
      p.tgt.push_back("t" + std::to_string(i));
      a.Add(i, i);
    }
    std::set<oracle::Box> expected;
    for (std::size_t i = 0; i < n; ++i) expected.insert({i, i + 1, i, i + 1});
    EXPECT_EQ(Boxes(ExtractPhrasePairs(p, a, 1)), expected) << "n=" << n;
  }
}

TEST(ExtractPhrasePairs, OneSidedRunsIgnoreMaxLen) {
  const PhraseTable t = ExtractPhrasePairs(Pair("a b c d", "x"), Alignment{{0, 0}}, 1);
  EXPECT_TRUE(t.entries.count(SourceOnly(1, 4)));
}

// Randomized agreement with the library's brute force and with the
// independent test oracle, plus structural properties of every entry.
class PhraseTableProperty : public ::testing::TestWithParam<double> {};

TEST_P(PhraseTableProperty, MatchesOraclesAndKeepsInvariants) {
  const double density = GetParam();
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const RandomInstance inst = MakeRandomInstance(8, density, seed);
    const PhraseTable fast = ExtractPhrasePairs(inst.pair, inst.alignment);
    const PhraseTable brute = ExtractPhrasePairsBruteForce(inst.pair, inst.alignment);
    ASSERT_EQ(fast.entries, brute.entries) << "seed " << seed;
    ASSERT_EQ(Boxes(fast), oracle::PhraseBoxes(inst.pair.src.size(), inst.pair.tgt.size(),
                                               LinksOf(inst.alignment)))
        << "seed " << seed;

    for (const PhrasePair& e : fast.entries) {
      std::size_t inside = 0;
      for (const Link& l : inst.alignment.links()) {
        inside += (e.src.Contains(l.src) || e.tgt.Contains(l.tgt)) ? 1 : 0;
      }
      if (e.IsOneSided()) {
        EXPECT_EQ(inside, 0u);
      } else {
        EXPECT_GE(inside, 1u);
      }
    }
  }
}

TEST_P(PhraseTableProperty, CappedTableMatchesCappedOracle) {
  const double density = GetParam();
  for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
    const RandomInstance inst = MakeRandomInstance(8, density, seed);
    for (std::size_t cap : {1u, 2u, 4u}) {
      ASSERT_EQ(ExtractPhrasePairs(inst.pair, inst.alignment, cap).entries,
                ExtractPhrasePairsBruteForce(inst.pair, inst.alignment, cap).entries)
          << "seed " << seed << " cap " << cap;
    }
  }
}

TEST_P(PhraseTableProperty, RemovingALinkKeepsUnalignedTokensUnaligned) {
  const double density = GetParam();
  for (std::uint64_t seed = 2000; seed < 2200; ++seed) {
    const RandomInstance inst = MakeRandomInstance(8, density, seed);
    if (inst.alignment.empty()) continue;
    const auto covered = [&](const PhraseTable& t) {
      std::set<std::pair<int, std::size_t>> tokens;
      for (const PhrasePair& e : t.entries) {
        if (!e.IsOneSided()) continue;
        for (std::size_t i = e.src.start; i < e.src.end; ++i) tokens.insert({0, i});
        for (std::size_t j = e.tgt.start; j < e.tgt.end; ++j) tokens.insert({1, j});
      }
      return tokens;
    };
    const auto before = covered(ExtractPhrasePairs(inst.pair, inst.alignment));
    std::set<Link> fewer = inst.alignment.links();
    fewer.erase(fewer.begin());
    const auto after = covered(ExtractPhrasePairs(inst.pair, Alignment(fewer)));
    for (const auto& token : before) EXPECT_TRUE(after.count(token)) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(Densities, PhraseTableProperty,
                         ::testing::Values(0.1, 0.25, 0.5));

}  // namespace
}  // namespace divex
