#include "divex/service.h"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "divex/random.h"

namespace divex {

using nlohmann::json;

namespace {

constexpr const char* kSessionsFile = "sessions.jsonl";
constexpr const char* kAnnotationsFile = "annotations.jsonl";
constexpr const char* kSurveysFile = "surveys.jsonl";

std::int64_t NowUnixMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

bool SublabelFitsTask(Sublabel sublabel, StudyTask task) {
  const bool divergence = sublabel == Sublabel::kAdded || sublabel == Sublabel::kChanged;
  return divergence == (task == StudyTask::kDivergence);
}

json SessionToJson(const StudySession& s) {
  json items = json::array();
  for (const StudyItem& item : s.items) {
    items.push_back({item.instance_index, item.attention_check ? 1 : 0});
  }
  return json{{"session_id", s.session_id},
              {"study_id", s.study_id},
              {"condition", ConditionName(s.condition)},
              {"items", std::move(items)}};
}

void CheckLikert(int value, const char* field) {
  if (value < 1 || value > 5) {
    throw Error(ErrorCode::kValidationError,
                std::string(field) + " must be an integer in 1..5");
  }
}

}  // namespace

std::string_view StudyTaskName(StudyTask task) {
  return task == StudyTask::kDivergence ? "divergence" : "severity";
}

StudyTask ParseStudyTask(std::string_view name) {
  if (name == "divergence") return StudyTask::kDivergence;
  if (name == "severity") return StudyTask::kSeverity;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown study task '" + std::string(name) + "'");
}

StudyService::StudyService(std::vector<Study> studies, std::uint64_t seed,
                           std::string store_dir)
    : seed_(seed), store_dir_(std::move(store_dir)) {
  std::size_t ordinal = 0;
  for (Study& study : studies) {
    if (study.instances.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "study '" + study.id + "' has no instances");
    }
    const std::string id = study.id;
    StudyState state{std::move(study), ordinal++, 0};
    if (!studies_.emplace(id, std::move(state)).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate study id '" + id + "'");
    }
  }
  if (!store_dir_.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(store_dir_, ec);
    if (ec) {
      throw Error(ErrorCode::kIoError,
                  "cannot create store directory " + store_dir_ + ": " +
                      ec.message());
    }
    Replay();
  }
}

StudyService::StudyState& StudyService::FindStudy(const std::string& study_id) {
  const auto it = studies_.find(study_id);
  if (it == studies_.end()) {
    throw Error(ErrorCode::kStudyNotFound, "no study '" + study_id + "'");
  }
  return it->second;
}

const StudyService::StudyState& StudyService::FindStudy(
    const std::string& study_id) const {
  const auto it = studies_.find(study_id);
  if (it == studies_.end()) {
    throw Error(ErrorCode::kStudyNotFound, "no study '" + study_id + "'");
  }
  return it->second;
}

StudyService::SessionState& StudyService::FindSession(
    const std::string& session_id) {
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kSessionNotFound, "no session '" + session_id + "'");
  }
  return it->second;
}

std::vector<StudyItem> StudyService::Schedule(const StudyState& state,
                                              std::size_t index) const {
  const std::size_t n = state.study.instances.size();
  Rng rng(SplitSeed(SplitSeed(seed_, state.ordinal), index));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[UniformIndex(rng, i)]);
  }
  // Positions after which a check repeats the item just answered.
  std::vector<std::size_t> slots(n);
  for (std::size_t i = 0; i < n; ++i) slots[i] = i;
  const std::size_t checks = std::min(state.study.attention_checks, n);
  for (std::size_t i = 0; i < checks; ++i) {
    std::swap(slots[i], slots[i + UniformIndex(rng, n - i)]);
  }
  std::vector<bool> check_after(n, false);
  for (std::size_t i = 0; i < checks; ++i) check_after[slots[i]] = true;

  std::vector<StudyItem> items;
  items.reserve(n + checks);
  for (std::size_t p = 0; p < n; ++p) {
    items.push_back({order[p], false});
    if (check_after[p]) items.push_back({order[p], true});
  }
  return items;
}

void StudyService::Append(const std::string& file, const std::string& line) {
  if (store_dir_.empty()) return;
  const std::string path = (std::filesystem::path(store_dir_) / file).string();
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::kIoError,
                "cannot open " + path + ": " + std::strerror(errno));
  }
  const std::string data = line + "\n";
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string err = std::strerror(errno);
      ::close(fd);
      throw Error(ErrorCode::kIoError, "write to " + path + " failed: " + err);
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(ErrorCode::kIoError, "fsync of " + path + " failed");
}

void StudyService::ApplyAnnotation(SessionState& s,
                                   const AnnotationRecord& record) {
  s.answers[s.session.cursor] = record.label;
  ++s.session.cursor;
  s.delivered_at.reset();
}

void StudyService::Replay() {
  const auto read_lines = [&](const char* file, auto fn) {
    const std::string path = (std::filesystem::path(store_dir_) / file).string();
    std::ifstream in(path);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        fn(line);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kParseError,
                    path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  };

  read_lines(kSessionsFile, [&](const std::string& line) {
    const json obj = json::parse(line);
    SessionState state;
    state.session.session_id = obj.at("session_id").get<std::string>();
    state.session.study_id = obj.at("study_id").get<std::string>();
    state.session.condition = ParseCondition(obj.at("condition").get<std::string>());
    StudyState& study = FindStudy(state.session.study_id);
    for (const json& item : obj.at("items")) {
      const std::size_t index = item.at(0).get<std::size_t>();
      if (index >= study.study.instances.size()) {
        throw Error(ErrorCode::kParseError, "session item out of range");
      }
      state.session.items.push_back({index, item.at(1).get<int>() != 0});
    }
    ++study.sessions_created;
    sessions_[state.session.session_id] = std::move(state);
  });

  read_lines(kAnnotationsFile, [&](const std::string& line) {
    AnnotationRecord record = AnnotationFromJson(line);
    SessionState& s = FindSession(record.session_id);
    if (s.session.cursor >= s.session.items.size()) {
      throw Error(ErrorCode::kParseError, "more annotations than session items");
    }
    ApplyAnnotation(s, record);
    annotations_.push_back(std::move(record));
  });

  read_lines(kSurveysFile, [&](const std::string& line) {
    const json obj = json::parse(line);
    SurveyResponse survey = SurveyResponseFromJson(line);
    SessionState& s = FindSession(survey.session_id);
    s.survey_done = true;
    surveys_.emplace_back(obj.at("study_id").get<std::string>(), std::move(survey));
  });
}

SessionInfo StudyService::CreateSession(const std::string& study_id) {
  std::lock_guard<std::mutex> lock(mu_);
  StudyState& state = FindStudy(study_id);
  const std::size_t index = state.sessions_created;

  SessionState s;
  s.session.study_id = study_id;
  s.session.condition = index % 2 == 0 ? Condition::kWithHighlights
                                       : Condition::kWithoutHighlights;
  s.session.items = Schedule(state, index);
  char suffix[16];
  std::snprintf(suffix, sizeof(suffix), "%08llx",
                static_cast<unsigned long long>(
                    SplitSeed(seed_ ^ 0x5E551011ULL, state.ordinal * 1000003ULL + index) &
                    0xFFFFFFFFULL));
  s.session.session_id = study_id + "-" + std::to_string(index) + "-" + suffix;

  Append(kSessionsFile, SessionToJson(s.session).dump());
  ++state.sessions_created;
  SessionInfo info{s.session.session_id, study_id, state.study.task,
                   s.session.items.size()};
  sessions_[info.session_id] = std::move(s);
  return info;
}

InstancePayload StudyService::GetNextInstance(const std::string& session_id) {
  std::lock_guard<std::mutex> lock(mu_);
  SessionState& s = FindSession(session_id);
  if (s.session.cursor >= s.session.items.size()) {
    throw Error(ErrorCode::kSessionComplete,
                "session '" + session_id + "' is complete");
  }
  const StudyState& study = FindStudy(s.session.study_id);
  const StudyItem& item = s.session.items[s.session.cursor];
  const CorpusInstance& inst = study.study.instances[item.instance_index];

  InstancePayload payload;
  payload.session_id = session_id;
  payload.item = s.session.cursor;
  payload.total = s.session.items.size();
  payload.task = study.study.task;
  payload.src_lang = inst.pair.src_lang;
  payload.tgt_lang = inst.pair.tgt_lang;
  payload.src = inst.pair.src;
  payload.tgt = inst.pair.tgt;
  if (s.session.condition == Condition::kWithHighlights) {
    std::vector<HighlightGroup> groups;
    if (const auto it = study.study.highlights.find(inst.pair.id);
        it != study.study.highlights.end()) {
      for (std::size_t k = 0; k < it->second.phrases.size(); ++k) {
        const Highlight& h = it->second.phrases[k];
        HighlightGroup g{k, h.phrase.src, h.phrase.tgt, h.src_tokens, h.tgt_tokens};
        if (g.src_tokens.empty() && g.tgt_tokens.empty()) {
          for (std::size_t i = g.src.start; i < g.src.end; ++i) g.src_tokens.push_back(i);
          for (std::size_t j = g.tgt.start; j < g.tgt.end; ++j) g.tgt_tokens.push_back(j);
        }
        groups.push_back(std::move(g));
      }
    }
    payload.highlights = std::move(groups);
  }
  s.delivered_at = std::chrono::steady_clock::now();
  return payload;
}

AnnotationRecord StudyService::SubmitAnnotation(
    const AnnotationSubmission& submission) {
  std::lock_guard<std::mutex> lock(mu_);
  SessionState& s = FindSession(submission.session_id);
  const StudyState& study = FindStudy(s.session.study_id);
  if (submission.item >= s.session.items.size()) {
    throw Error(ErrorCode::kValidationError,
                "item " + std::to_string(submission.item) + " is out of range");
  }
  if (submission.item < s.session.cursor) {
    throw Error(ErrorCode::kDuplicateSubmission,
                "item " + std::to_string(submission.item) +
                    " was already annotated in session '" +
                    submission.session_id + "'");
  }
  if (submission.item > s.session.cursor) {
    throw Error(ErrorCode::kValidationError,
                "item " + std::to_string(submission.item) +
                    " has not been delivered yet");
  }
  if (submission.sublabel &&
      !SublabelFitsTask(*submission.sublabel, study.study.task)) {
    throw Error(ErrorCode::kValidationError,
                "sublabel '" + std::string(SublabelName(*submission.sublabel)) +
                    "' does not belong to the " +
                    std::string(StudyTaskName(study.study.task)) + " task");
  }

  const StudyItem& item = s.session.items[submission.item];
  AnnotationRecord record;
  record.study_id = s.session.study_id;
  record.session_id = submission.session_id;
  record.annotator_id = submission.annotator_id.empty() ? submission.session_id
                                                        : submission.annotator_id;
  record.instance_id = study.study.instances[item.instance_index].pair.id;
  record.condition = s.session.condition;
  record.label = submission.label;
  record.sublabel = submission.sublabel;
  record.elapsed_ms = submission.elapsed_ms;
  record.received_at_ms = NowUnixMs();
  if (s.delivered_at) {
    record.server_elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - *s.delivered_at)
            .count();
  }
  record.attention_check = item.attention_check;
  if (item.attention_check) {
    const auto prev = s.answers.find(submission.item - 1);
    record.attention_passed =
        prev != s.answers.end() && prev->second == submission.label;
  }
  record.Validate();

  Append(kAnnotationsFile, AnnotationToJson(record));
  ApplyAnnotation(s, record);
  annotations_.push_back(record);
  return record;
}

void StudyService::SubmitSurvey(const SurveyResponse& survey) {
  std::lock_guard<std::mutex> lock(mu_);
  SessionState& s = FindSession(survey.session_id);
  CheckLikert(survey.usefulness, "usefulness");
  if (survey.adoption) CheckLikert(*survey.adoption, "adoption");
  if (s.session.cursor < s.session.items.size()) {
    throw Error(ErrorCode::kValidationError,
                "survey submitted before the session was completed");
  }
  if (s.survey_done) {
    throw Error(ErrorCode::kDuplicateSubmission,
                "survey already submitted for session '" + survey.session_id + "'");
  }
  json line = json::parse(SurveyResponseToJson(survey));
  line["study_id"] = s.session.study_id;
  Append(kSurveysFile, line.dump());
  s.survey_done = true;
  surveys_.emplace_back(s.session.study_id, survey);
}

std::vector<AnnotationRecord> StudyService::ExportAnnotations(
    const std::string& study_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  FindStudy(study_id);
  std::vector<AnnotationRecord> out;
  for (const AnnotationRecord& r : annotations_) {
    if (r.study_id == study_id) out.push_back(r);
  }
  return out;
}

std::vector<SurveyResponse> StudyService::ExportSurveys(
    const std::string& study_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  FindStudy(study_id);
  std::vector<SurveyResponse> out;
  for (const auto& [study, survey] : surveys_) {
    if (study == study_id) out.push_back(survey);
  }
  return out;
}

std::vector<std::string> StudyService::StudyIds() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, state] : studies_) ids.push_back(id);
  return ids;
}

StudySession StudyService::GetSession(const std::string& session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kSessionNotFound, "no session '" + session_id + "'");
  }
  return it->second.session;
}

// --- JSON forms -------------------------------------------------------------

std::string InstancePayloadToJson(const InstancePayload& p) {
  json obj{{"session_id", p.session_id},
           {"item", p.item},
           {"total", p.total},
           {"task", StudyTaskName(p.task)},
           {"src_lang", p.src_lang},
           {"tgt_lang", p.tgt_lang},
           {"src", p.src},
           {"tgt", p.tgt}};
  if (p.highlights) {
    json groups = json::array();
    for (const HighlightGroup& g : *p.highlights) {
      groups.push_back({{"color", g.color},
                        {"src", {g.src.start, g.src.end}},
                        {"tgt", {g.tgt.start, g.tgt.end}},
                        {"src_tokens", g.src_tokens},
                        {"tgt_tokens", g.tgt_tokens}});
    }
    obj["highlights"] = std::move(groups);
  }
  return obj.dump();
}

std::string SessionInfoToJson(const SessionInfo& info) {
  return json{{"session_id", info.session_id},
              {"study_id", info.study_id},
              {"task", StudyTaskName(info.task)},
              {"total", info.total}}
      .dump();
}

namespace {

json ParseBody(std::string_view body) {
  json obj = json::parse(body, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw Error(ErrorCode::kValidationError, "request body must be a JSON object");
  }
  return obj;
}

template <typename Fn>
auto WithValidation(Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidationError, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) {
      throw Error(ErrorCode::kValidationError, e.what());
    }
    throw;
  }
}

}  // namespace

AnnotationSubmission AnnotationSubmissionFromJson(std::string_view body) {
  return WithValidation([&] {
    const json obj = ParseBody(body);
    AnnotationSubmission s;
    s.session_id = obj.at("session_id").get<std::string>();
    s.item = obj.at("item").get<std::size_t>();
    s.label = ParseLabel(obj.at("label").get<std::string>());
    if (obj.contains("sublabel") && !obj["sublabel"].is_null()) {
      s.sublabel = ParseSublabel(obj["sublabel"].get<std::string>());
    }
    s.elapsed_ms = obj.value("elapsed_ms", std::int64_t{0});
    s.annotator_id = obj.value("annotator_id", "");
    if (s.sublabel && s.label != Label::kDivergent) {
      throw Error(ErrorCode::kValidationError,
                  "sublabel is only allowed when label is divergent");
    }
    if (s.elapsed_ms < 0) {
      throw Error(ErrorCode::kValidationError, "elapsed_ms is negative");
    }
    return s;
  });
}

SurveyResponse SurveyResponseFromJson(std::string_view body) {
  return WithValidation([&] {
    const json obj = ParseBody(body);
    SurveyResponse s;
    s.session_id = obj.at("session_id").get<std::string>();
    s.usefulness = obj.at("usefulness").get<int>();
    if (obj.contains("adoption") && !obj["adoption"].is_null()) {
      s.adoption = obj["adoption"].get<int>();
    }
    s.feedback = obj.value("feedback", "");
    if (obj.contains("demographics") && obj["demographics"].is_object()) {
      for (const auto& [k, v] : obj["demographics"].items()) {
        s.demographics[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    return s;
  });
}

std::string SurveyResponseToJson(const SurveyResponse& s) {
  json obj{{"session_id", s.session_id},
           {"usefulness", s.usefulness},
           {"adoption", nullptr},
           {"feedback", s.feedback},
           {"demographics", s.demographics}};
  if (s.adoption) obj["adoption"] = *s.adoption;
  return obj.dump();
}

}  // namespace divex
