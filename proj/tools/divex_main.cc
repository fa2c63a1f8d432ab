// Command-line entry point. Every subcommand prints a one-line JSON summary
// on success; failures print one JSON line {"error", "message"} on stderr
// and exit nonzero.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "divex/baselines.h"
#include "divex/eval.h"
#include "divex/external_scorer.h"
#include "divex/extractor.h"
#include "divex/io.h"
#include "divex/service.h"
#include "divex/synthetic.h"

namespace {

using nlohmann::json;
using namespace divex;

constexpr int kExitFailure = 2;

struct Options {
  RunConfig run;
  std::size_t max_phrase_len = 0;  // 0 means unlimited
  bool no_brevity_reward = false;
  std::string baseline_kind = "random";

  std::string corpus;
  std::string out;
  std::string align_lexicon;

  std::string pred;
  std::string gold;
  std::string mode = "micro";
  std::string annotations;

  std::string group_a;
  std::string group_b;
  std::string records;
  std::string metric = "accuracy";
  std::size_t resamples = 1000;

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data;
  std::string store;
  std::string study_id = "study";
  std::string task = "divergence";
  std::string highlights;
  std::string static_dir;
  std::size_t attention_checks = 2;

  std::string synth_kind = "planted";
  std::size_t synth_n = 200;
  double divergent_fraction = 0.5;
  std::string lexicon_out;
};

void PrintJson(const json& j) { std::cout << j.dump() << std::endl; }

json PrfJson(const PrfScores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

void Finalize(Options& o) {
  o.run.extractor.use_brevity_reward = !o.no_brevity_reward;
  if (o.max_phrase_len > 0) o.run.extractor.max_phrase_len = o.max_phrase_len;
  o.run.extractor.Validate();
  o.run.baseline.kind = ParseBaselineKind(o.baseline_kind);
  o.run.baseline.seed = o.run.seed;
}

std::vector<Alignment> CorpusAlignments(const std::vector<CorpusInstance>& corpus,
                                        const std::string& align_lexicon) {
  std::optional<BilingualLexicon> lexicon;
  if (!align_lexicon.empty()) lexicon = BilingualLexicon::Load(align_lexicon);
  std::vector<Alignment> out;
  out.reserve(corpus.size());
  for (const CorpusInstance& inst : corpus) {
    if (auto a = InstanceAlignment(inst)) {
      out.push_back(std::move(*a));
    } else if (lexicon) {
      out.push_back(ToyAlign(inst.pair, *lexicon));
    } else {
      throw Error(ErrorCode::kParseError,
                  "instance '" + inst.pair.id +
                      "' has no alignment; run align-toy or pass --align-lexicon");
    }
  }
  return out;
}

std::vector<SentencePair> Pairs(const std::vector<CorpusInstance>& corpus) {
  std::vector<SentencePair> pairs;
  pairs.reserve(corpus.size());
  for (const CorpusInstance& inst : corpus) pairs.push_back(inst.pair);
  return pairs;
}

// Gold masks keyed by id, from a corpus file (gold_*_mask) or a mask file.
std::map<std::string, TokenMaskPair> LoadGoldMasks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::string first;
  while (std::getline(in, first) && first.empty()) {
  }
  const json probe = json::parse(first, nullptr, false);
  std::map<std::string, TokenMaskPair> gold;
  if (probe.is_object() && probe.contains("src") && probe.contains("tgt") &&
      !probe.contains("src_mask")) {
    for (const CorpusInstance& inst : LoadCorpus(path)) {
      if (!inst.gold_masks) {
        throw Error(ErrorCode::kMissingGold,
                    "instance '" + inst.pair.id + "' has no gold masks");
      }
      gold.emplace(inst.pair.id, *inst.gold_masks);
    }
  } else {
    for (MaskRecord& r : ReadMasks(path)) gold.emplace(r.id, std::move(r.masks));
  }
  return gold;
}

std::map<std::string, Label> LoadGoldLabels(const std::string& path) {
  std::map<std::string, Label> gold;
  for (const CorpusInstance& inst : LoadCorpus(path)) {
    if (inst.gold_label) gold.emplace(inst.pair.id, *inst.gold_label);
  }
  return gold;
}

// --- subcommands -------------------------------------------------------------

void RunExtract(const Options& o) {
  const std::vector<CorpusInstance> corpus = LoadCorpus(o.corpus);
  const std::vector<Alignment> alignments = CorpusAlignments(corpus, o.align_lexicon);
  const std::vector<SentencePair> pairs = Pairs(corpus);
  const std::shared_ptr<CachingScorer> scorer = MakeScorer(o.run);
  const std::vector<HighlightSet> results =
      ExtractCorpus(pairs, alignments, *scorer, o.run.extractor, o.run.threads);
  WriteHighlights(o.out, results, pairs);

  std::size_t highlighted = 0;
  std::size_t phrases = 0;
  for (const HighlightSet& r : results) {
    highlighted += r.phrases.empty() ? 0 : 1;
    phrases += r.phrases.size();
  }
  PrintJson({{"command", "extract"},
             {"instances", results.size()},
             {"instances_with_highlights", highlighted},
             {"phrases", phrases},
             {"scorer_calls", scorer->misses()},
             {"cache_hits", scorer->hits()},
             {"output", o.out}});
}

void RunBaselineCommand(const Options& o) {
  const std::vector<CorpusInstance> corpus = LoadCorpus(o.corpus);
  std::shared_ptr<CachingScorer> scorer;
  if (o.run.baseline.kind == BaselineKind::kLeaveOneOut) scorer = MakeScorer(o.run);
  std::vector<MaskRecord> records;
  records.reserve(corpus.size());
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const SentencePair& pair = corpus[i].pair;
    try {
      records.push_back({pair.id, RunBaseline(pair, i, scorer.get(), o.run.baseline)});
    } catch (const Error& e) {
      // Leave-one-out is undefined on a one-token side. Such pairs get empty
      // masks and are counted rather than aborting the whole corpus.
      if (e.code() != ErrorCode::kSideTooShort) throw;
      records.push_back({pair.id, TokenMaskPair::AllFalse(pair)});
      ++skipped;
    }
  }
  WriteMasks(o.out, records);
  PrintJson({{"command", "baseline"},
             {"kind", BaselineKindName(o.run.baseline.kind)},
             {"instances", records.size()},
             {"skipped_short", skipped},
             {"output", o.out}});
}

void RunEvalMasks(const Options& o) {
  const std::vector<MaskRecord> preds = ReadMasks(o.pred);
  const std::map<std::string, TokenMaskPair> gold = LoadGoldMasks(o.gold);
  std::vector<TokenMaskPair> pred_masks;
  std::vector<TokenMaskPair> gold_masks;
  for (const MaskRecord& p : preds) {
    const auto it = gold.find(p.id);
    if (it == gold.end()) {
      throw Error(ErrorCode::kMissingGold, "no gold masks for '" + p.id + "'");
    }
    pred_masks.push_back(p.masks);
    gold_masks.push_back(it->second);
  }
  if (pred_masks.size() != gold.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "prediction file covers " + std::to_string(pred_masks.size()) +
                    " of " + std::to_string(gold.size()) + " gold instances");
  }
  const AveragingMode mode = ParseAveragingMode(o.mode);
  const EvalReport report = Evaluate(pred_masks, gold_masks);
  const PrfScores& selected = mode == AveragingMode::kMicro ? report.micro : report.macro;
  json out = PrfJson(selected);
  out["command"] = "eval";
  out["mode"] = AveragingModeName(mode);
  out["micro"] = PrfJson(report.micro);
  out["macro"] = PrfJson(report.macro);
  out["minimality"] = {{"mean_tokens", report.minimality.mean_tokens},
                       {"mean_fraction", report.minimality.mean_fraction}};
  out["instances"] = report.n_instances;
  PrintJson(out);
}

void RunEvalAnnotations(const Options& o) {
  const std::vector<AnnotationRecord> records = ReadAnnotations(o.annotations);
  const std::map<std::string, Label> gold = LoadGoldLabels(o.gold);
  json by_condition = json::object();
  for (Condition c : {Condition::kWithHighlights, Condition::kWithoutHighlights}) {
    std::vector<AnnotationRecord> subset;
    for (const AnnotationRecord& r : records) {
      if (r.condition == c) subset.push_back(r);
    }
    bool has_scored = false;
    for (const AnnotationRecord& r : subset) has_scored |= !r.attention_check;
    if (!has_scored) continue;
    const std::optional<double> kappa = AnnotationKappa(subset);
    by_condition[std::string(ConditionName(c))] = {
        {"records", subset.size()},
        {"accuracy", AnnotationMetricValue(subset, gold, AnnotationMetric::kAccuracy)},
        {"group", PrfJson(AnnotationAccuracy(subset, gold, AccuracyScope::kGroup))},
        {"majority", PrfJson(AnnotationAccuracy(subset, gold, AccuracyScope::kMajority))},
        {"kappa", kappa ? json(*kappa) : json(nullptr)}};
  }
  std::size_t checks = 0;
  std::size_t passed = 0;
  for (const AnnotationRecord& r : records) {
    if (!r.attention_check) continue;
    ++checks;
    passed += r.attention_passed.value_or(false) ? 1 : 0;
  }
  PrintJson({{"command", "eval"},
             {"records", records.size()},
             {"conditions", by_condition},
             {"attention_checks", checks},
             {"attention_passed", passed}});
}

void RunCompare(const Options& o) {
  const std::map<std::string, Label> gold = LoadGoldLabels(o.gold);
  std::vector<AnnotationRecord> group_a;
  std::vector<AnnotationRecord> group_b;
  std::string label_a = o.group_a;
  std::string label_b = o.group_b;
  if (!o.records.empty()) {
    // A single export split by condition: A = with, B = without highlights.
    for (AnnotationRecord& r : ReadAnnotations(o.records)) {
      (r.condition == Condition::kWithHighlights ? group_a : group_b)
          .push_back(std::move(r));
    }
    label_a = std::string(ConditionName(Condition::kWithHighlights));
    label_b = std::string(ConditionName(Condition::kWithoutHighlights));
  } else {
    if (o.group_a.empty() || o.group_b.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "compare needs --group-a and --group-b, or --records");
    }
    group_a = ReadAnnotations(o.group_a);
    group_b = ReadAnnotations(o.group_b);
  }
  const auto drop_checks = [](std::vector<AnnotationRecord>& v) {
    std::erase_if(v, [](const AnnotationRecord& r) { return r.attention_check; });
  };
  drop_checks(group_a);
  drop_checks(group_b);

  const AnnotationMetric metric = ParseAnnotationMetric(o.metric);
  const auto value = [&](std::span<const AnnotationRecord> records) {
    return AnnotationMetricValue(records, gold, metric);
  };
  const double p = BootstrapPValue<AnnotationRecord>(group_a, group_b, value,
                                                     o.resamples, o.run.seed);
  PrintJson({{"command", "compare"},
             {"metric", AnnotationMetricName(metric)},
             {"group_a", {{"name", label_a}, {"records", group_a.size()},
                          {"value", value(group_a)}}},
             {"group_b", {{"name", label_b}, {"records", group_b.size()},
                          {"value", value(group_b)}}},
             {"resamples", o.resamples},
             {"seed", o.run.seed},
             {"p_value", p}});
}

void RunAlignToy(const Options& o) {
  if (o.run.lexicon_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "align-toy needs --lexicon");
  }
  const BilingualLexicon lexicon = BilingualLexicon::Load(o.run.lexicon_path);
  std::vector<CorpusInstance> corpus = LoadCorpus(o.corpus);
  std::size_t links = 0;
  for (CorpusInstance& inst : corpus) {
    const Alignment a = ToyAlign(inst.pair, lexicon);
    links += a.links().size();
    inst.alignment = a.ToString();
  }
  WriteCorpus(o.out, corpus);
  PrintJson({{"command", "align-toy"},
             {"instances", corpus.size()},
             {"links", links},
             {"output", o.out}});
}

std::shared_ptr<StudyHttpServer> g_server;

void HandleSignal(int) {
  if (g_server) g_server->Stop();
}

void RunServe(const Options& o) {
  Study study;
  study.id = o.study_id;
  study.task = ParseStudyTask(o.task);
  study.instances = LoadCorpus(o.data);
  study.attention_checks = o.attention_checks;
  if (!o.highlights.empty()) {
    for (HighlightSet& h : ReadHighlights(o.highlights)) {
      const std::string id = h.pair_id;
      study.highlights.emplace(id, std::move(h));
    }
  }
  std::vector<Study> studies;
  studies.push_back(std::move(study));
  auto service = std::make_shared<StudyService>(std::move(studies), o.run.seed, o.store);
  g_server = std::make_shared<StudyHttpServer>(service);
  if (!o.static_dir.empty()) g_server->MountStatic(o.static_dir);
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  std::cerr << json{{"command", "serve"}, {"host", o.host}, {"port", o.port},
                    {"study", o.study_id}}
                   .dump()
            << std::endl;
  g_server->Listen(o.host, o.port);
  g_server.reset();
}

void RunScoreServer(const Options& o, bool http) {
  if (o.run.lexicon_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "score needs --lexicon");
  }
  auto scorer =
      std::make_shared<LexicalScorer>(BilingualLexicon::Load(o.run.lexicon_path));
  if (!http) {
    ServeScoreStream(std::cin, std::cout, *scorer);
    return;
  }
  ScoreHttpServer server(scorer);
  server.Listen(o.host, o.port);
}

void RunSynth(const Options& o) {
  SyntheticCorpus corpus;
  if (o.synth_kind == "planted") {
    corpus = MakePlantedCorpus(o.synth_n, o.divergent_fraction, o.run.seed);
  } else if (o.synth_kind == "multi") {
    corpus = MakeMultiPhraseCorpus(o.synth_n, o.run.seed);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown synthetic corpus kind '" + o.synth_kind + "'");
  }
  WriteCorpus(o.out, corpus.instances);
  if (!o.lexicon_out.empty()) {
    std::ofstream lex(o.lexicon_out);
    lex << corpus.lexicon.Serialize();
    if (!lex) throw Error(ErrorCode::kIoError, "cannot write " + o.lexicon_out);
  }
  PrintJson({{"command", "synth"},
             {"kind", o.synth_kind},
             {"instances", corpus.instances.size()},
             {"output", o.out}});
}

// --- option wiring -------------------------------------------------------------

void AddScorerOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--lexicon", o.run.lexicon_path,
                  "Bilingual lexicon for the built-in lexical scorer");
  cmd->add_option("--scorer", o.run.scorer_command,
                  "External scorer command, spoken to over stdin/stdout");
  cmd->add_option("--scorer-url", o.run.scorer_url,
                  "External scorer HTTP endpoint, e.g. http://host:port/score");
  cmd->add_option("--scorer-timeout-ms", o.run.scorer_timeout_ms,
                  "Per-batch timeout for external scorers")
      ->check(CLI::PositiveNumber);
}

void AddExtractorOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--epsilon", o.run.extractor.epsilon,
                  "Minimum score gain for a contrast case")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--no-brevity-reward", o.no_brevity_reward,
                "Rank candidates by raw score instead of score times brevity reward");
  cmd->add_option("--max-phrase-len", o.max_phrase_len,
                  "Cap on each side of two-sided phrase pairs (0 = none)");
  cmd->add_option("--max-iterations", o.run.extractor.max_iterations,
                  "Upper bound on erasure steps per instance");
}

// Config files are flat: a key without a section belongs to the subcommand
// given on the command line, so `corpus = x` sets `extract --corpus x`.
class FlatConfig : public CLI::ConfigTOML {
 public:
  explicit FlatConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigTOML::from_config(input);
    const auto selected = app_->get_subcommands();
    if (selected.empty()) return items;
    for (CLI::ConfigItem& item : items) {
      if (item.parents.empty() && item.name != "++" && item.name != "--") {
        item.parents = {selected.front()->get_name()};
      }
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

void ConfigureApp(CLI::App& app, Options& o,
                  std::function<void()>& action) {
  app.set_config("--config", "", "Flat key = value file; flags override it");
  app.config_formatter(std::make_shared<FlatConfig>(&app));
  app.require_subcommand(1);

  auto* extract = app.add_subcommand("extract", "Extract contrastive highlights");
  extract->add_option("--corpus", o.corpus, "Corpus file")->required();
  extract->add_option("--out", o.out, "Highlights output file")->required();
  extract->add_option("--align-lexicon", o.align_lexicon,
                      "Toy-align instances that have no alignment with this lexicon");
  extract->add_option("--seed", o.run.seed, "Run seed");
  extract->add_option("--threads", o.run.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  AddScorerOptions(extract, o);
  AddExtractorOptions(extract, o);
  extract->callback([&] { action = [&] { RunExtract(o); }; });

  auto* baseline = app.add_subcommand("baseline", "Random or leave-one-out token masks");
  baseline->add_option("--corpus", o.corpus, "Corpus file")->required();
  baseline->add_option("--out", o.out, "Mask output file")->required();
  baseline->add_option("--kind", o.baseline_kind, "random or loo")
      ->check(CLI::IsMember({"random", "loo"}));
  baseline->add_option("--probability", o.run.baseline.probability,
                       "Marking probability for random masks")
      ->check(CLI::Range(0.0, 1.0));
  baseline->add_option("--threshold", o.run.baseline.threshold,
                       "Importance threshold for leave-one-out");
  baseline->add_option("--seed", o.run.seed, "Run seed");
  AddScorerOptions(baseline, o);
  baseline->callback([&] { action = [&] { RunBaselineCommand(o); }; });

  auto* eval = app.add_subcommand(
      "eval", "Token P/R/F1 and minimality, or annotation accuracy and kappa");
  auto* pred = eval->add_option("--pred", o.pred, "Predicted masks or highlights");
  auto* ann = eval->add_option("--annotations", o.annotations, "Annotation records");
  pred->excludes(ann);
  eval->add_option("--gold", o.gold, "Gold corpus or mask file")->required();
  eval->add_option("--mode", o.mode, "micro or macro")
      ->check(CLI::IsMember({"micro", "macro"}));
  eval->callback([&, pred, ann] {
    if (pred->count() == 0 && ann->count() == 0) {
      throw CLI::RequiredError("--pred or --annotations");
    }
    action = [&, use_pred = pred->count() > 0] {
      use_pred ? RunEvalMasks(o) : RunEvalAnnotations(o);
    };
  });

  auto* compare = app.add_subcommand(
      "compare", "Bootstrap test that group A scores higher than group B");
  compare->add_option("--group-a", o.group_a, "Annotation records of group A");
  compare->add_option("--group-b", o.group_b, "Annotation records of group B");
  compare->add_option("--records", o.records,
                      "One export, split into with (A) and without (B) highlights");
  compare->add_option("--gold", o.gold, "Corpus with gold labels")->required();
  compare->add_option("--metric", o.metric, "accuracy, precision, recall or f1")
      ->check(CLI::IsMember({"accuracy", "precision", "recall", "f1"}));
  compare->add_option("--resamples", o.resamples, "Bootstrap resamples")
      ->check(CLI::PositiveNumber);
  compare->add_option("--seed", o.run.seed, "Bootstrap seed");
  compare->callback([&] { action = [&] { RunCompare(o); }; });

  auto* align = app.add_subcommand("align-toy", "Fill in alignments with the toy aligner");
  align->add_option("--corpus", o.corpus, "Corpus file")->required();
  align->add_option("--out", o.out, "Aligned corpus output")->required();
  align->add_option("--lexicon", o.run.lexicon_path, "Bilingual lexicon")->required();
  align->callback([&] { action = [&] { RunAlignToy(o); }; });

  auto* serve = app.add_subcommand("serve", "Annotation study HTTP service");
  serve->add_option("--data", o.data, "Study corpus")->required();
  serve->add_option("--store", o.store, "Directory for the append-only record logs")
      ->required();
  serve->add_option("--port", o.port, "Listen port");
  serve->add_option("--host", o.host, "Listen address");
  serve->add_option("--study-id", o.study_id, "Study id");
  serve->add_option("--task", o.task, "divergence or severity")
      ->check(CLI::IsMember({"divergence", "severity"}));
  serve->add_option("--highlights", o.highlights, "Highlights shown to annotators");
  serve->add_option("--attention-checks", o.attention_checks,
                    "Attention checks per session");
  serve->add_option("--static", o.static_dir, "Directory with the annotation UI");
  serve->add_option("--seed", o.run.seed, "Session scheduling seed");
  serve->callback([&] { action = [&] { RunServe(o); }; });

  auto* score = app.add_subcommand(
      "score", "Serve the lexical scorer over the wire protocol (stdio by default)");
  score->add_option("--lexicon", o.run.lexicon_path, "Bilingual lexicon")->required();
  auto* http = score->add_option("--port", o.port, "Serve HTTP on this port instead");
  score->add_option("--host", o.host, "HTTP listen address");
  score->callback([&, http] {
    action = [&, use_http = http->count() > 0] { RunScoreServer(o, use_http); };
  });

  auto* synth = app.add_subcommand("synth", "Write a synthetic demo corpus");
  synth->add_option("--kind", o.synth_kind, "planted or multi")
      ->check(CLI::IsMember({"planted", "multi"}));
  synth->add_option("--n", o.synth_n, "Number of instances");
  synth->add_option("--divergent-fraction", o.divergent_fraction,
                    "Share of divergent instances (planted only)")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", o.run.seed, "Generator seed");
  synth->add_option("--out", o.out, "Corpus output")->required();
  synth->add_option("--lexicon-out", o.lexicon_out, "Write the lexicon here");
  synth->callback([&] { action = [&] { RunSynth(o); }; });

  // `--config` is accepted after the subcommand name too.
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();
}

void PrintError(std::string_view code, std::string_view message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"divex: contrastive phrasal highlights for divergence rankers"};
  Options options;
  std::function<void()> action;
  ConfigureApp(app, options, action);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("UsageError", e.what());
    return e.get_exit_code() == 0 ? kExitFailure : e.get_exit_code();
  }
  try {
    Finalize(options);
    action();
  } catch (const Error& e) {
    PrintError(ErrorCodeName(e.code()), e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    PrintError("InternalError", e.what());
    return kExitFailure;
  }
  return EXIT_SUCCESS;
}
