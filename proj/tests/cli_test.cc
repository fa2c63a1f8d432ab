#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "divex/io.h"
#include "divex/synthetic.h"
#include "test_util.h"

namespace divex {
namespace {

using nlohmann::json;
using testing::TempDir;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult RunCli(const TempDir& dir, const std::string& args) {
  const std::string out = dir.File("stdout.txt");
  const std::string err = dir.File("stderr.txt");
  const std::string cmd = std::string(DIVEX_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::stringstream o, e;
  o << std::ifstream(out).rdbuf();
  e << std::ifstream(err).rdbuf();
  r.out = o.str();
  r.err = e.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const RunResult r = RunCli(dir_, "synth --kind planted --n 40 --seed 3 --out " +
                                      dir_.File("c.jsonl") + " --lexicon-out " + dir_.File("lex.tsv"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }
  TempDir dir_;
};

TEST_F(CliTest, ExtractThenEval) {
  RunResult r = RunCli(dir_, "extract --corpus " + dir_.File("c.jsonl") + " --lexicon " +
                              dir_.File("lex.tsv") + " --out " + dir_.File("h.jsonl") +
                              " --threads 2");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["instances"], 40);
  EXPECT_EQ(ReadHighlights(dir_.File("h.jsonl")).size(), 40u);

  r = RunCli(dir_, "eval --pred " + dir_.File("h.jsonl") + " --gold " + dir_.File("c.jsonl") +
                    " --mode macro");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_EQ(report["mode"], "macro");
  EXPECT_EQ(report["micro"]["f1"], 1.0);
}

TEST_F(CliTest, ConfigFileAndFlagOverride) {
  std::ofstream(dir_.File("run.ini")) << "corpus = " << dir_.File("c.jsonl") << "\n"
                                      << "lexicon = " << dir_.File("lex.tsv") << "\n"
                                      << "out = " << dir_.File("from_config.jsonl") << "\n"
                                      << "epsilon = 0.5\n";
  RunResult r = RunCli(dir_, "extract --config " + dir_.File("run.ini"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(std::ifstream(dir_.File("from_config.jsonl")).good());
  r = RunCli(dir_, "extract --config " + dir_.File("run.ini") + " --out " + dir_.File("flag.jsonl"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(std::ifstream(dir_.File("flag.jsonl")).good());
}

TEST_F(CliTest, BaselinesWriteMasks) {
  RunResult r = RunCli(dir_, "baseline --corpus " + dir_.File("c.jsonl") + " --out " +
                              dir_.File("r.jsonl") + " --kind random --seed 5");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(ReadMasks(dir_.File("r.jsonl")).size(), 40u);
  r = RunCli(dir_, "baseline --corpus " + dir_.File("c.jsonl") + " --out " + dir_.File("l.jsonl") +
                    " --kind loo --lexicon " + dir_.File("lex.tsv"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  r = RunCli(dir_, "eval --pred " + dir_.File("l.jsonl") + " --gold " + dir_.File("c.jsonl"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
}

TEST_F(CliTest, AlignToyFillsAlignments) {
  std::ofstream(dir_.File("raw.jsonl")) << R"({"id":"a","src":"w1 w2","tgt":"v2 v1"})" << "\n";
  const RunResult r = RunCli(dir_, "align-toy --corpus " + dir_.File("raw.jsonl") + " --lexicon " +
                                    dir_.File("lex.tsv") + " --out " + dir_.File("aligned.jsonl"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(LoadCorpus(dir_.File("aligned.jsonl"))[0].alignment, "0-1 1-0");
}

TEST_F(CliTest, CompareSplitsAnExportByCondition) {
  std::vector<AnnotationRecord> records;
  const std::vector<CorpusInstance> corpus = LoadCorpus(dir_.File("c.jsonl"));
  for (const CorpusInstance& inst : corpus) {
    for (Condition c : {Condition::kWithHighlights, Condition::kWithoutHighlights}) {
      AnnotationRecord r;
      r.study_id = "s";
      r.session_id = r.annotator_id = std::string(ConditionName(c));
      r.instance_id = inst.pair.id;
      r.condition = c;
      r.label = c == Condition::kWithHighlights ? *inst.gold_label : Label::kEquivalent;
      records.push_back(r);
    }
  }
  WriteAnnotations(dir_.File("a.jsonl"), records);
  RunResult r = RunCli(dir_, "compare --records " + dir_.File("a.jsonl") + " --gold " +
                              dir_.File("c.jsonl") + " --metric f1 --seed 1");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const json out = json::parse(r.out);
  EXPECT_DOUBLE_EQ(out["p_value"].get<double>(), 1.0 / 1001.0);
  r = RunCli(dir_, "eval --annotations " + dir_.File("a.jsonl") + " --gold " + dir_.File("c.jsonl"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["conditions"]["with_highlights"]["accuracy"], 1.0);
}

TEST_F(CliTest, FailuresAreOneJsonLine) {
  for (const std::string& args :
       {std::string("eval --pred /nonexistent --gold ") + dir_.File("c.jsonl"),
        std::string("extract --corpus ") + dir_.File("c.jsonl") + " --out x.jsonl",
        std::string("frobnicate")}) {
    const RunResult r = RunCli(dir_, args);
    EXPECT_NE(r.exit_code, 0) << args;
    ASSERT_FALSE(r.err.empty()) << args;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
    const json e = json::parse(r.err);
    EXPECT_TRUE(e.contains("error") && e.contains("message")) << r.err;
  }
}

}  // namespace
}  // namespace divex
