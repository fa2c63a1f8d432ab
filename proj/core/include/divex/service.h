#ifndef DIVEX_SERVICE_H_
#define DIVEX_SERVICE_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "divex/core.h"
#include "divex/eval.h"
#include "divex/io.h"

namespace divex {

// Study I asks whether a pair differs in meaning (sublabels added/changed);
// study II asks for error severity (minor/major).
enum class StudyTask { kDivergence, kSeverity };

std::string_view StudyTaskName(StudyTask task);
StudyTask ParseStudyTask(std::string_view name);

struct Study {
  std::string id;
  StudyTask task = StudyTask::kDivergence;
  std::vector<CorpusInstance> instances;
  // Keyed by instance id; instances without an entry show no highlights.
  std::map<std::string, HighlightSet> highlights;
  std::size_t attention_checks = 2;
};

// One slot in a session's schedule. An attention check repeats the
// instance of the slot right before it.
struct StudyItem {
  std::size_t instance_index = 0;
  bool attention_check = false;

  friend bool operator==(const StudyItem&, const StudyItem&) = default;
};

struct StudySession {
  std::string session_id;
  std::string study_id;
  Condition condition = Condition::kWithoutHighlights;
  std::vector<StudyItem> items;
  std::size_t cursor = 0;
};

struct SessionInfo {
  std::string session_id;
  std::string study_id;
  StudyTask task = StudyTask::kDivergence;
  std::size_t total = 0;
};

// Highlight shown to an annotator; `color` pairs the two sides of one
// phrase.
struct HighlightGroup {
  std::size_t color = 0;
  Span src;
  Span tgt;
  std::vector<std::size_t> src_tokens;
  std::vector<std::size_t> tgt_tokens;
};

// What a client sees for one item. Carries no gold data and no instance id,
// so attention checks look like any other item. `highlights` is set only in
// the with-highlights condition.
struct InstancePayload {
  std::string session_id;
  std::size_t item = 0;
  std::size_t total = 0;
  StudyTask task = StudyTask::kDivergence;
  std::string src_lang;
  std::string tgt_lang;
  TokenList src;
  TokenList tgt;
  std::optional<std::vector<HighlightGroup>> highlights;
};

struct AnnotationSubmission {
  std::string session_id;
  std::size_t item = 0;
  Label label = Label::kEquivalent;
  std::optional<Sublabel> sublabel;
  std::int64_t elapsed_ms = 0;
  std::string annotator_id;  // defaults to the session id
};

struct SurveyResponse {
  std::string session_id;
  int usefulness = 0;             // 1..5
  std::optional<int> adoption;    // 1..5, study II
  std::string feedback;
  std::map<std::string, std::string> demographics;
};

// Serves annotation studies. Sessions alternate between the two conditions
// per study; each session gets its own seeded instance order with attention
// checks interleaved. Everything is persisted to `store_dir` (sessions.jsonl,
// annotations.jsonl, surveys.jsonl) before a call returns, and replayed on
// construction. An empty store_dir keeps state in memory only.
//
// Thread-safe; all calls are serialized.
class StudyService {
 public:
  StudyService(std::vector<Study> studies, std::uint64_t seed,
               std::string store_dir = {});

  SessionInfo CreateSession(const std::string& study_id);
  InstancePayload GetNextInstance(const std::string& session_id);
  AnnotationRecord SubmitAnnotation(const AnnotationSubmission& submission);
  void SubmitSurvey(const SurveyResponse& survey);

  // Annotation records of a study in submission order.
  std::vector<AnnotationRecord> ExportAnnotations(const std::string& study_id) const;
  std::vector<SurveyResponse> ExportSurveys(const std::string& study_id) const;

  std::vector<std::string> StudyIds() const;
  // Snapshot for inspection and tests.
  StudySession GetSession(const std::string& session_id) const;

 private:
  struct StudyState {
    Study study;
    std::size_t ordinal = 0;
    std::size_t sessions_created = 0;
  };
  struct SessionState {
    StudySession session;
    std::map<std::size_t, Label> answers;
    std::optional<std::chrono::steady_clock::time_point> delivered_at;
    bool survey_done = false;
  };

  StudyState& FindStudy(const std::string& study_id);
  const StudyState& FindStudy(const std::string& study_id) const;
  SessionState& FindSession(const std::string& session_id);
  std::vector<StudyItem> Schedule(const StudyState& state, std::size_t index) const;
  void Append(const std::string& file, const std::string& line);
  void Replay();
  void ApplyAnnotation(SessionState& s, const AnnotationRecord& record);

  mutable std::mutex mu_;
  std::uint64_t seed_;
  std::string store_dir_;
  std::map<std::string, StudyState> studies_;
  std::map<std::string, SessionState> sessions_;
  std::vector<AnnotationRecord> annotations_;
  std::vector<std::pair<std::string, SurveyResponse>> surveys_;  // (study, survey)
};

// JSON forms used on the wire.
std::string InstancePayloadToJson(const InstancePayload& payload);
std::string SessionInfoToJson(const SessionInfo& info);
AnnotationSubmission AnnotationSubmissionFromJson(std::string_view body);
SurveyResponse SurveyResponseFromJson(std::string_view body);
std::string SurveyResponseToJson(const SurveyResponse& survey);

// HTTP front end:
//   POST /api/session     {"study_id"}            -> session info
//   GET  /api/next?session=ID                     -> instance payload
//   POST /api/annotation  submission              -> {"status", "item", "remaining"}
//   POST /api/survey      survey                  -> {"status"}
//   GET  /api/export?study=ID                     -> annotation records, one per line
//   GET  /api/health                              -> {"status", "studies"}
// Errors are {"code", "message"} with a matching HTTP status.
class StudyHttpServer {
 public:
  explicit StudyHttpServer(std::shared_ptr<StudyService> service);
  ~StudyHttpServer();

  StudyHttpServer(const StudyHttpServer&) = delete;
  StudyHttpServer& operator=(const StudyHttpServer&) = delete;

  // Serves static files (the annotation UI) under "/".
  void MountStatic(const std::string& dir);
  // Binds and serves on a background thread; port 0 picks a free port.
  int Start(const std::string& host, int port);
  // Serves on the calling thread until Stop().
  void Listen(const std::string& host, int port);
  void Stop();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace divex

#endif  // DIVEX_SERVICE_H_
