#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "divex/service.h"

namespace divex {

using nlohmann::json;

namespace {

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kStudyNotFound:
    case ErrorCode::kSessionNotFound:
      return 404;
    case ErrorCode::kSessionComplete:
      return 410;
    case ErrorCode::kDuplicateSubmission:
      return 409;
    case ErrorCode::kValidationError:
    case ErrorCode::kParseError:
    case ErrorCode::kInvalidArgument:
      return 400;
    default:
      return 500;
  }
}

void SendError(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = HttpStatusFor(code);
  res.set_content(json{{"code", ErrorCodeName(code)}, {"message", message}}.dump(),
                  "application/json");
}

void SendJson(httplib::Response& res, const std::string& body) {
  res.status = 200;
  res.set_content(body, "application/json");
}

std::string RequiredParam(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) {
    throw Error(ErrorCode::kValidationError,
                std::string("missing query parameter '") + name + "'");
  }
  return req.get_param_value(name);
}

}  // namespace

class StudyHttpServer::Impl {
 public:
  explicit Impl(std::shared_ptr<StudyService> service) : service_(std::move(service)) {
    Route(&httplib::Server::Post, "/api/session",
          [this](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object() ||
                !body.contains("study_id") || !body["study_id"].is_string()) {
              throw Error(ErrorCode::kValidationError,
                          "body must be {\"study_id\": string}");
            }
            SendJson(res, SessionInfoToJson(service_->CreateSession(
                              body["study_id"].get<std::string>())));
          });
    Route(&httplib::Server::Get, "/api/next",
          [this](const httplib::Request& req, httplib::Response& res) {
            SendJson(res, InstancePayloadToJson(
                              service_->GetNextInstance(RequiredParam(req, "session"))));
          });
    Route(&httplib::Server::Post, "/api/annotation",
          [this](const httplib::Request& req, httplib::Response& res) {
            const AnnotationSubmission sub = AnnotationSubmissionFromJson(req.body);
            service_->SubmitAnnotation(sub);
            const StudySession session = service_->GetSession(sub.session_id);
            SendJson(res, json{{"status", "ok"},
                               {"item", sub.item},
                               {"remaining", session.items.size() - session.cursor}}
                              .dump());
          });
    Route(&httplib::Server::Post, "/api/survey",
          [this](const httplib::Request& req, httplib::Response& res) {
            service_->SubmitSurvey(SurveyResponseFromJson(req.body));
            SendJson(res, json{{"status", "ok"}}.dump());
          });
    Route(&httplib::Server::Get, "/api/export",
          [this](const httplib::Request& req, httplib::Response& res) {
            std::string out;
            for (const AnnotationRecord& r :
                 service_->ExportAnnotations(RequiredParam(req, "study"))) {
              out += AnnotationToJson(r);
              out += '\n';
            }
            res.status = 200;
            res.set_content(out, "application/x-ndjson");
          });
    Route(&httplib::Server::Get, "/api/health",
          [this](const httplib::Request&, httplib::Response& res) {
            SendJson(res, json{{"status", "ok"}, {"studies", service_->StudyIds()}}.dump());
          });
  }

  ~Impl() { Stop(); }

  void MountStatic(const std::string& dir) {
    if (!server_.set_mount_point("/", dir)) {
      throw Error(ErrorCode::kIoError, "cannot serve static files from " + dir);
    }
  }

  int Start(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host)
                                : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
      throw Error(ErrorCode::kIoError,
                  "cannot bind " + host + ":" + std::to_string(port));
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  void Listen(const std::string& host, int port) {
    if (!server_.listen(host, port)) {
      throw Error(ErrorCode::kIoError,
                  "cannot listen on " + host + ":" + std::to_string(port));
    }
  }

  void Stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;
  using Method = httplib::Server& (httplib::Server::*)(const std::string&,
                                                       httplib::Server::Handler);

  void Route(Method method, const std::string& pattern, Handler handler) {
    (server_.*method)(pattern, [handler = std::move(handler)](
                                   const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        SendError(res, e.code(), e.what());
      } catch (const std::exception& e) {
        SendError(res, ErrorCode::kIoError, e.what());
      }
    });
  }

  std::shared_ptr<StudyService> service_;
  httplib::Server server_;
  std::thread thread_;
};

StudyHttpServer::StudyHttpServer(std::shared_ptr<StudyService> service)
    : impl_(std::make_unique<Impl>(std::move(service))) {}

StudyHttpServer::~StudyHttpServer() = default;

void StudyHttpServer::MountStatic(const std::string& dir) { impl_->MountStatic(dir); }

int StudyHttpServer::Start(const std::string& host, int port) {
  return impl_->Start(host, port);
}

void StudyHttpServer::Listen(const std::string& host, int port) {
  impl_->Listen(host, port);
}

void StudyHttpServer::Stop() { impl_->Stop(); }

}  // namespace divex
