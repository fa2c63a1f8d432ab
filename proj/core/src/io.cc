#include "divex/io.h"

#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "divex/external_scorer.h"

namespace divex {

using nlohmann::json;

namespace {

[[noreturn]] void FieldError(std::string_view source, std::size_t line,
                             std::string_view field, std::string_view what) {
  throw Error(ErrorCode::kParseError,
              std::string(source) + ":" + std::to_string(line) + ": field '" +
                  std::string(field) + "' " + std::string(what));
}

std::ifstream OpenForRead(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return in;
}

std::ofstream OpenForWrite(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  return out;
}

void CheckWritten(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

// Calls `fn(line_number, json)` for every non-blank line.
template <typename Fn>
void ForEachJsonLine(std::istream& in, std::string_view source, Fn fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw Error(ErrorCode::kParseError, std::string(source) + ":" +
                                              std::to_string(line_no) +
                                              ": not a JSON object");
    }
    fn(line_no, obj);
  }
}

json MaskToJson(const std::vector<bool>& mask) {
  json out = json::array();
  for (bool b : mask) out.push_back(b);
  return out;
}

std::vector<bool> MaskFromJson(const json& value, std::string_view source,
                               std::size_t line, std::string_view field) {
  if (!value.is_array()) FieldError(source, line, field, "must be an array");
  std::vector<bool> mask;
  for (const json& v : value) {
    if (v.is_boolean()) {
      mask.push_back(v.get<bool>());
    } else if (v.is_number_integer() && (v == 0 || v == 1)) {
      mask.push_back(v == 1);
    } else {
      FieldError(source, line, field, "must contain only 0/1 or booleans");
    }
  }
  return mask;
}

TokenList TokensFromJson(const json& value, std::string_view source,
                         std::size_t line, std::string_view field) {
  try {
    if (value.is_string()) return Tokenize(value.get<std::string>());
    if (value.is_array()) {
      TokenList tokens;
      for (const json& t : value) {
        if (!t.is_string() || t.get<std::string>().empty()) {
          FieldError(source, line, field, "must contain non-empty strings");
        }
        tokens.push_back(t.get<std::string>());
      }
      if (tokens.empty()) FieldError(source, line, field, "is empty");
      return tokens;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    FieldError(source, line, field, e.what());
  }
  FieldError(source, line, field, "must be a string or an array of tokens");
}

std::string OptionalString(const json& obj, std::string_view key,
                           std::string_view source, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) FieldError(source, line, key, "must be a string");
  return it->get<std::string>();
}

std::string SpanText(const TokenList& tokens, const std::vector<std::size_t>& idx) {
  std::string out;
  for (std::size_t i : idx) {
    if (i >= tokens.size()) continue;
    if (!out.empty()) out += ' ';
    out += tokens[i];
  }
  return out;
}

bool IsContiguous(const std::vector<std::size_t>& idx, const Span& span) {
  if (idx.size() != span.length()) return false;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] != span.start + k) return false;
  }
  return true;
}

std::vector<std::size_t> SpanIndices(const Span& span) {
  std::vector<std::size_t> idx;
  for (std::size_t i = span.start; i < span.end; ++i) idx.push_back(i);
  return idx;
}

Span SpanFromJson(const json& value, std::string_view field) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number_unsigned() ||
      !value[1].is_number_unsigned()) {
    throw Error(ErrorCode::kParseError,
                "phrase field '" + std::string(field) + "' must be [start, end]");
  }
  Span s{value[0].get<std::size_t>(), value[1].get<std::size_t>()};
  if (s.start > s.end) {
    throw Error(ErrorCode::kParseError,
                "phrase field '" + std::string(field) + "' has start > end");
  }
  return s.empty() ? Span{} : s;
}

}  // namespace

// --- corpus -----------------------------------------------------------------

std::vector<CorpusInstance> ParseCorpus(std::istream& in,
                                        std::string_view source) {
  std::vector<CorpusInstance> corpus;
  std::set<std::string> seen;
  ForEachJsonLine(in, source, [&](std::size_t line, const json& obj) {
    CorpusInstance inst;
    const auto id = obj.find("id");
    if (id == obj.end() || !id->is_string() || id->get<std::string>().empty()) {
      FieldError(source, line, "id", "must be a non-empty string");
    }
    inst.pair.id = id->get<std::string>();
    if (!seen.insert(inst.pair.id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  std::string(source) + ":" + std::to_string(line) +
                      ": duplicate id '" + inst.pair.id + "'");
    }
    for (const char* key : {"src", "tgt"}) {
      if (!obj.contains(key)) FieldError(source, line, key, "is missing");
    }
    inst.pair.src = TokensFromJson(obj["src"], source, line, "src");
    inst.pair.tgt = TokensFromJson(obj["tgt"], source, line, "tgt");
    inst.pair.src_lang = OptionalString(obj, "src_lang", source, line);
    inst.pair.tgt_lang = OptionalString(obj, "tgt_lang", source, line);

    if (const auto a = obj.find("alignment"); a != obj.end() && !a->is_null()) {
      if (!a->is_string()) FieldError(source, line, "alignment", "must be a string");
      inst.alignment = a->get<std::string>();
      try {
        ParseAlignment(*inst.alignment, inst.pair.src.size(),
                       inst.pair.tgt.size());
      } catch (const Error& e) {
        FieldError(source, line, "alignment", e.what());
      }
    }

    const bool has_src_mask = obj.contains("gold_src_mask") && !obj["gold_src_mask"].is_null();
    const bool has_tgt_mask = obj.contains("gold_tgt_mask") && !obj["gold_tgt_mask"].is_null();
    if (has_src_mask != has_tgt_mask) {
      FieldError(source, line, has_src_mask ? "gold_tgt_mask" : "gold_src_mask",
                 "is missing while its counterpart is present");
    }
    if (has_src_mask) {
      TokenMaskPair m{
          MaskFromJson(obj["gold_src_mask"], source, line, "gold_src_mask"),
          MaskFromJson(obj["gold_tgt_mask"], source, line, "gold_tgt_mask")};
      if (m.src.size() != inst.pair.src.size()) {
        FieldError(source, line, "gold_src_mask",
                   "has length " + std::to_string(m.src.size()) +
                       ", expected " + std::to_string(inst.pair.src.size()));
      }
      if (m.tgt.size() != inst.pair.tgt.size()) {
        FieldError(source, line, "gold_tgt_mask",
                   "has length " + std::to_string(m.tgt.size()) +
                       ", expected " + std::to_string(inst.pair.tgt.size()));
      }
      inst.gold_masks = std::move(m);
    }
    try {
      if (const std::string label = OptionalString(obj, "gold_label", source, line);
          !label.empty()) {
        inst.gold_label = ParseLabel(label);
      }
      if (const std::string sub = OptionalString(obj, "gold_sublabel", source, line);
          !sub.empty()) {
        inst.gold_sublabel = ParseSublabel(sub);
      }
    } catch (const Error& e) {
      FieldError(source, line, "gold_label", e.what());
    }
    corpus.push_back(std::move(inst));
  });
  return corpus;
}

std::vector<CorpusInstance> LoadCorpus(const std::string& path) {
  std::ifstream in = OpenForRead(path);
  return ParseCorpus(in, path);
}

std::string CorpusInstanceToJson(const CorpusInstance& inst) {
  json obj{{"id", inst.pair.id},
           {"src", JoinTokens(inst.pair.src)},
           {"tgt", JoinTokens(inst.pair.tgt)}};
  if (!inst.pair.src_lang.empty()) obj["src_lang"] = inst.pair.src_lang;
  if (!inst.pair.tgt_lang.empty()) obj["tgt_lang"] = inst.pair.tgt_lang;
  if (inst.alignment) obj["alignment"] = *inst.alignment;
  if (inst.gold_masks) {
    obj["gold_src_mask"] = MaskToJson(inst.gold_masks->src);
    obj["gold_tgt_mask"] = MaskToJson(inst.gold_masks->tgt);
  }
  if (inst.gold_label) obj["gold_label"] = LabelName(*inst.gold_label);
  if (inst.gold_sublabel) obj["gold_sublabel"] = SublabelName(*inst.gold_sublabel);
  return obj.dump();
}

void WriteCorpus(const std::string& path,
                 std::span<const CorpusInstance> instances) {
  std::ofstream out = OpenForWrite(path);
  for (const CorpusInstance& inst : instances) {
    out << CorpusInstanceToJson(inst) << '\n';
  }
  CheckWritten(out, path);
}

std::optional<Alignment> InstanceAlignment(const CorpusInstance& instance) {
  if (!instance.alignment) return std::nullopt;
  return ParseAlignment(*instance.alignment, instance.pair.src.size(),
                        instance.pair.tgt.size());
}

Alignment ToyAlign(const SentencePair& pair, const BilingualLexicon& lexicon) {
  Alignment alignment;
  std::vector<bool> linked(pair.tgt.size(), false);
  for (std::size_t i = 0; i < pair.src.size(); ++i) {
    for (std::size_t j = 0; j < pair.tgt.size(); ++j) {
      if (!linked[j] && lexicon.Matches(pair.src[i], pair.tgt[j])) {
        linked[j] = true;
        alignment.Add(i, j);
        break;
      }
    }
  }
  return alignment;
}

// --- highlights -------------------------------------------------------------

std::string HighlightSetToJson(const HighlightSet& result,
                               const SentencePair& pair) {
  json phrases = json::array();
  for (const Highlight& h : result.phrases) {
    const std::vector<std::size_t> src_idx =
        h.src_tokens.empty() && h.tgt_tokens.empty() ? SpanIndices(h.phrase.src)
                                                     : h.src_tokens;
    const std::vector<std::size_t> tgt_idx =
        h.src_tokens.empty() && h.tgt_tokens.empty() ? SpanIndices(h.phrase.tgt)
                                                     : h.tgt_tokens;
    json p{{"src", {h.phrase.src.start, h.phrase.src.end}},
           {"tgt", {h.phrase.tgt.start, h.phrase.tgt.end}},
           {"src_text", SpanText(pair.src, src_idx)},
           {"tgt_text", SpanText(pair.tgt, tgt_idx)},
           {"score_del", h.score_del},
           {"objective", h.objective}};
    if (!IsContiguous(src_idx, h.phrase.src)) p["src_tokens"] = src_idx;
    if (!IsContiguous(tgt_idx, h.phrase.tgt)) p["tgt_tokens"] = tgt_idx;
    phrases.push_back(std::move(p));
  }
  json obj{{"id", result.pair_id},
           {"phrases", std::move(phrases)},
           {"src_mask", MaskToJson(result.masks.src)},
           {"tgt_mask", MaskToJson(result.masks.tgt)},
           {"iterations", result.iterations},
           {"stopped_by", StopReasonName(result.stopped_by)},
           {"initial_score", result.initial_score},
           {"final_score", result.final_score}};
  return obj.dump();
}

HighlightSet HighlightSetFromJson(std::string_view line) {
  json obj = json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw Error(ErrorCode::kParseError, "highlight record is not a JSON object");
  }
  try {
    HighlightSet hs;
    hs.pair_id = obj.at("id").get<std::string>();
    hs.masks.src = MaskFromJson(obj.at("src_mask"), "highlights", 0, "src_mask");
    hs.masks.tgt = MaskFromJson(obj.at("tgt_mask"), "highlights", 0, "tgt_mask");
    hs.iterations = obj.at("iterations").get<std::size_t>();
    hs.stopped_by = ParseStopReason(obj.at("stopped_by").get<std::string>());
    hs.initial_score = obj.value("initial_score", 0.0);
    hs.final_score = obj.value("final_score", 0.0);
    for (const json& p : obj.at("phrases")) {
      Highlight h;
      h.phrase.src = SpanFromJson(p.at("src"), "src");
      h.phrase.tgt = SpanFromJson(p.at("tgt"), "tgt");
      h.src_tokens = p.contains("src_tokens")
                         ? p["src_tokens"].get<std::vector<std::size_t>>()
                         : SpanIndices(h.phrase.src);
      h.tgt_tokens = p.contains("tgt_tokens")
                         ? p["tgt_tokens"].get<std::vector<std::size_t>>()
                         : SpanIndices(h.phrase.tgt);
      h.score_del = p.at("score_del").get<double>();
      h.objective = p.at("objective").get<double>();
      hs.phrases.push_back(std::move(h));
    }
    return hs;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("malformed highlight record: ") + e.what());
  }
}

void WriteHighlights(const std::string& path,
                     std::span<const HighlightSet> results,
                     std::span<const SentencePair> pairs) {
  if (results.size() != pairs.size()) {
    throw Error(ErrorCode::kShapeError,
                "highlight results and pairs differ in count");
  }
  std::ofstream out = OpenForWrite(path);
  for (std::size_t i = 0; i < results.size(); ++i) {
    out << HighlightSetToJson(results[i], pairs[i]) << '\n';
  }
  CheckWritten(out, path);
}

std::vector<HighlightSet> ReadHighlights(const std::string& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<HighlightSet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(HighlightSetFromJson(line));
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// --- masks ------------------------------------------------------------------

std::string MaskRecordToJson(const MaskRecord& record) {
  return json{{"id", record.id},
              {"src_mask", MaskToJson(record.masks.src)},
              {"tgt_mask", MaskToJson(record.masks.tgt)}}
      .dump();
}

void WriteMasks(const std::string& path, std::span<const MaskRecord> records) {
  std::ofstream out = OpenForWrite(path);
  for (const MaskRecord& r : records) out << MaskRecordToJson(r) << '\n';
  CheckWritten(out, path);
}

std::vector<MaskRecord> ReadMasks(const std::string& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<MaskRecord> out;
  std::set<std::string> seen;
  ForEachJsonLine(in, path, [&](std::size_t line, const json& obj) {
    MaskRecord r;
    if (!obj.contains("id") || !obj["id"].is_string()) {
      FieldError(path, line, "id", "must be a string");
    }
    r.id = obj["id"].get<std::string>();
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::kDuplicateId, path + ":" + std::to_string(line) +
                                               ": duplicate id '" + r.id + "'");
    }
    for (const char* key : {"src_mask", "tgt_mask"}) {
      if (!obj.contains(key)) FieldError(path, line, key, "is missing");
    }
    r.masks.src = MaskFromJson(obj["src_mask"], path, line, "src_mask");
    r.masks.tgt = MaskFromJson(obj["tgt_mask"], path, line, "tgt_mask");
    out.push_back(std::move(r));
  });
  return out;
}

// --- annotations ------------------------------------------------------------

std::string AnnotationToJson(const AnnotationRecord& r) {
  json obj{{"study_id", r.study_id},
           {"session_id", r.session_id},
           {"annotator_id", r.annotator_id},
           {"instance_id", r.instance_id},
           {"condition", ConditionName(r.condition)},
           {"label", LabelName(r.label)},
           {"sublabel", nullptr},
           {"elapsed_ms", r.elapsed_ms},
           {"server_elapsed_ms", r.server_elapsed_ms},
           {"received_at_ms", r.received_at_ms},
           {"attention_check", r.attention_check}};
  if (r.sublabel) obj["sublabel"] = SublabelName(*r.sublabel);
  if (r.attention_passed) obj["attention_passed"] = *r.attention_passed;
  return obj.dump();
}

AnnotationRecord AnnotationFromJson(std::string_view line) {
  json obj = json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw Error(ErrorCode::kParseError, "annotation record is not a JSON object");
  }
  AnnotationRecord r;
  try {
    r.study_id = obj.value("study_id", "");
    r.session_id = obj.value("session_id", "");
    r.annotator_id = obj.at("annotator_id").get<std::string>();
    r.instance_id = obj.at("instance_id").get<std::string>();
    r.condition = ParseCondition(obj.at("condition").get<std::string>());
    r.label = ParseLabel(obj.at("label").get<std::string>());
    if (obj.contains("sublabel") && !obj["sublabel"].is_null()) {
      r.sublabel = ParseSublabel(obj["sublabel"].get<std::string>());
    }
    r.elapsed_ms = obj.value("elapsed_ms", std::int64_t{0});
    r.server_elapsed_ms = obj.value("server_elapsed_ms", std::int64_t{0});
    r.received_at_ms = obj.value("received_at_ms", std::int64_t{0});
    r.attention_check = obj.value("attention_check", false);
    if (obj.contains("attention_passed") && !obj["attention_passed"].is_null()) {
      r.attention_passed = obj["attention_passed"].get<bool>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("malformed annotation record: ") + e.what());
  }
  try {
    r.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return r;
}

void WriteAnnotations(const std::string& path,
                      std::span<const AnnotationRecord> records) {
  std::ofstream out = OpenForWrite(path);
  for (const AnnotationRecord& r : records) out << AnnotationToJson(r) << '\n';
  CheckWritten(out, path);
}

std::vector<AnnotationRecord> ReadAnnotations(const std::string& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<AnnotationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(AnnotationFromJson(line));
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// --- run configuration ------------------------------------------------------

void RunConfig::Validate() const {
  const int selected = static_cast<int>(!lexicon_path.empty()) +
                       static_cast<int>(!scorer_command.empty()) +
                       static_cast<int>(!scorer_url.empty());
  if (selected != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "select exactly one scorer (lexicon, command or url); got " +
                    std::to_string(selected));
  }
  if (scorer_timeout_ms <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "scorer timeout must be positive");
  }
  if (threads < 1) {
    throw Error(ErrorCode::kInvalidArgument, "threads must be >= 1");
  }
  extractor.Validate();
}

std::shared_ptr<CachingScorer> MakeScorer(const RunConfig& config) {
  config.Validate();
  std::shared_ptr<const Scorer> inner;
  if (!config.lexicon_path.empty()) {
    inner = std::make_shared<LexicalScorer>(
        BilingualLexicon::Load(config.lexicon_path));
  } else {
    ExternalScorerConfig ext;
    ext.timeout = std::chrono::milliseconds(config.scorer_timeout_ms);
    if (!config.scorer_command.empty()) {
      ext.transport = ExternalScorerConfig::Transport::kSubprocess;
      ext.command = config.scorer_command;
    } else {
      ext.transport = ExternalScorerConfig::Transport::kHttp;
      ext.url = config.scorer_url;
    }
    inner = MakeWireScorer(ext);
  }
  return std::make_shared<CachingScorer>(std::move(inner));
}

}  // namespace divex
