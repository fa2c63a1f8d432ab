#include "divex/external_scorer.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace divex {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

std::string Truncate(std::string_view line) {
  constexpr std::size_t kMax = 200;
  if (line.size() <= kMax) return std::string(line);
  return std::string(line.substr(0, kMax)) + "...";
}

json RequestObject(std::string_view id, const SentencePair& pair) {
  return json{{"id", id}, {"src", JoinTokens(pair.src)},
              {"tgt", JoinTokens(pair.tgt)}};
}

ScoreRequest RequestFromObject(const json& obj, std::string_view line) {
  if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
      !obj.contains("src") || !obj["src"].is_string() ||
      !obj.contains("tgt") || !obj["tgt"].is_string()) {
    throw Error(ErrorCode::kProtocolError,
                "malformed score request: " + Truncate(line));
  }
  ScoreRequest req;
  req.id = obj["id"].get<std::string>();
  req.pair.id = req.id;
  req.pair.src = Tokenize(obj["src"].get<std::string>());
  req.pair.tgt = Tokenize(obj["tgt"].get<std::string>());
  return req;
}

ScoreResponse ResponseFromObject(const json& obj, std::string_view line) {
  if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
      !obj.contains("score") || !obj["score"].is_number()) {
    throw Error(ErrorCode::kProtocolError,
                "malformed score response: " + Truncate(line));
  }
  ScoreResponse resp{obj["id"].get<std::string>(), obj["score"].get<double>()};
  if (!std::isfinite(resp.score)) {
    throw Error(ErrorCode::kProtocolError,
                "non-finite score in response: " + Truncate(line));
  }
  return resp;
}

// Orders responses by request position, checking count and ids.
std::vector<double> MatchResponses(const std::vector<ScoreResponse>& responses,
                                   std::size_t expected) {
  if (responses.size() != expected) {
    throw Error(ErrorCode::kLengthMismatch,
                "expected " + std::to_string(expected) + " scores, got " +
                    std::to_string(responses.size()));
  }
  std::vector<double> scores(expected, 0.0);
  std::vector<bool> seen(expected, false);
  for (const ScoreResponse& r : responses) {
    std::size_t index = 0;
    const bool numeric =
        !r.id.empty() &&
        r.id.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) index = std::stoul(r.id);
    if (!numeric || index >= expected || seen[index]) {
      throw Error(ErrorCode::kProtocolError,
                  "unexpected response id '" + r.id + "'");
    }
    seen[index] = true;
    scores[index] = r.score;
  }
  return scores;
}

}  // namespace

std::string EncodeScoreRequest(std::string_view id, const SentencePair& pair) {
  return RequestObject(id, pair).dump();
}

ScoreRequest DecodeScoreRequest(std::string_view line) {
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded()) {
    throw Error(ErrorCode::kProtocolError,
                "score request is not JSON: " + Truncate(line));
  }
  return RequestFromObject(obj, line);
}

std::string EncodeScoreResponse(std::string_view id, double score) {
  return json{{"id", id}, {"score", score}}.dump();
}

ScoreResponse DecodeScoreResponse(std::string_view line) {
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded()) {
    throw Error(ErrorCode::kProtocolError,
                "score response is not JSON: " + Truncate(line));
  }
  return ResponseFromObject(obj, line);
}

void ServeScoreStream(std::istream& in, std::ostream& out,
                      const Scorer& scorer) {
  std::vector<ScoreRequest> batch;
  const auto flush = [&] {
    std::vector<SentencePair> pairs;
    pairs.reserve(batch.size());
    for (const ScoreRequest& r : batch) pairs.push_back(r.pair);
    const std::vector<double> scores = scorer.ScoreBatch(pairs);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out << EncodeScoreResponse(batch[i].id, scores[i]) << '\n';
    }
    out << '\n';
    out.flush();
    batch.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
    } else {
      batch.push_back(DecodeScoreRequest(line));
    }
  }
  if (!batch.empty()) flush();
}

// --- SubprocessScorer -------------------------------------------------------

class SubprocessScorer::Process {
 public:
  explicit Process(const std::string& command) {
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) Fail("pipe");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      Fail("pipe");
    }
    pid_ = ::fork();
    if (pid_ < 0) Fail("fork");
    if (pid_ == 0) {
      // Own process group, so teardown also reaches commands the shell forks.
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid_, pid_);
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(write_fd_, F_SETFL, ::fcntl(write_fd_, F_GETFL) | O_NONBLOCK);
    ::fcntl(read_fd_, F_SETFL, ::fcntl(read_fd_, F_GETFL) | O_NONBLOCK);
  }

  ~Process() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      // Closing stdin lets a well-behaved child exit; give it a moment.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
          ::kill(-pid_, SIGKILL);
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
      ::kill(-pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  // Writes `payload` while draining the child's output into the read buffer.
  void Send(const std::string& payload, Clock::time_point deadline) {
    std::size_t written = 0;
    while (written < payload.size()) {
      pollfd fds[2] = {{write_fd_, POLLOUT, 0}, {read_fd_, POLLIN, 0}};
      Poll(fds, 2, deadline);
      if (fds[0].revents & (POLLERR | POLLHUP)) {
        throw Error(ErrorCode::kProtocolError, "scorer process closed its input");
      }
      if (fds[0].revents & POLLOUT) {
        const ssize_t n = ::write(write_fd_, payload.data() + written,
                                  payload.size() - written);
        if (n < 0 && errno != EAGAIN && errno != EINTR) Fail("write");
        if (n > 0) written += static_cast<std::size_t>(n);
      }
      if (fds[1].revents & POLLIN) Fill();
    }
  }

  std::string ReadLine(Clock::time_point deadline) {
    while (true) {
      const std::size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      pollfd fd{read_fd_, POLLIN, 0};
      Poll(&fd, 1, deadline);
      if (fd.revents & (POLLIN | POLLHUP)) {
        if (!Fill()) {
          throw Error(ErrorCode::kProtocolError,
                      "scorer process closed its output");
        }
      }
    }
  }

 private:
  [[noreturn]] static void Fail(const char* what) {
    throw Error(ErrorCode::kIoError,
                std::string(what) + ": " + std::strerror(errno));
  }

  static void Poll(pollfd* fds, nfds_t n, Clock::time_point deadline) {
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0) {
        throw Error(ErrorCode::kTimeout, "external scorer timed out");
      }
      const int rc = ::poll(fds, n, static_cast<int>(left.count()));
      if (rc > 0) return;
      if (rc < 0 && errno != EINTR) Fail("poll");
    }
  }

  // Returns false at end of stream.
  bool Fill() {
    char chunk[4096];
    while (true) {
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n > 0) {
        buffer_.append(chunk, static_cast<std::size_t>(n));
        return true;
      }
      if (n == 0) return false;
      if (errno == EINTR) continue;
      if (errno == EAGAIN) return true;
      Fail("read");
    }
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

SubprocessScorer::SubprocessScorer(std::string command,
                                   std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

SubprocessScorer::~SubprocessScorer() = default;

std::vector<double> SubprocessScorer::ScoreBatch(
    std::span<const SentencePair> pairs) const {
  if (pairs.empty()) return {};
  std::string payload;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    payload += EncodeScoreRequest(std::to_string(i), pairs[i]);
    payload += '\n';
  }
  payload += '\n';

  std::lock_guard<std::mutex> lock(mu_);
  if (!process_) process_ = std::make_unique<Process>(command_);
  const auto deadline = Clock::now() + timeout_;
  try {
    CountCall(pairs.size());
    process_->Send(payload, deadline);
    std::vector<ScoreResponse> responses;
    while (true) {
      const std::string line = process_->ReadLine(deadline);
      if (line.empty()) break;
      responses.push_back(DecodeScoreResponse(line));
    }
    return MatchResponses(responses, pairs.size());
  } catch (...) {
    // The stream may be out of sync; start over on the next call.
    process_.reset();
    throw;
  }
}

// --- HttpScorer -------------------------------------------------------------

HttpScorer::HttpScorer(std::string url, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  const std::size_t scheme = url.find("://");
  const std::size_t path_start =
      url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    base_ = url;
    path_ = "/score";
  } else {
    base_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
}

HttpScorer::~HttpScorer() = default;

std::vector<double> HttpScorer::ScoreBatch(
    std::span<const SentencePair> pairs) const {
  if (pairs.empty()) return {};
  json body = json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    body.push_back(RequestObject(std::to_string(i), pairs[i]));
  }

  std::lock_guard<std::mutex> lock(mu_);
  httplib::Client client(base_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  CountCall(pairs.size());
  const auto result = client.Post(path_, body.dump(), "application/json");
  if (!result) {
    const httplib::Error err = result.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::kTimeout,
                  "external scorer at " + base_ + path_ + " timed out");
    }
    throw Error(ErrorCode::kIoError, "request to " + base_ + path_ +
                                         " failed: " + httplib::to_string(err));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::kProtocolError,
                "external scorer returned HTTP " +
                    std::to_string(result->status) + ": " +
                    Truncate(result->body));
  }
  json reply = json::parse(result->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_array()) {
    throw Error(ErrorCode::kProtocolError,
                "score response is not a JSON array: " + Truncate(result->body));
  }
  std::vector<ScoreResponse> responses;
  for (const json& item : reply) {
    responses.push_back(ResponseFromObject(item, item.dump()));
  }
  return MatchResponses(responses, pairs.size());
}

std::shared_ptr<WireScorer> MakeWireScorer(const ExternalScorerConfig& config) {
  switch (config.transport) {
    case ExternalScorerConfig::Transport::kSubprocess:
      if (config.command.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "scorer command is empty");
      }
      return std::make_shared<SubprocessScorer>(config.command, config.timeout);
    case ExternalScorerConfig::Transport::kHttp:
      if (config.url.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "scorer url is empty");
      }
      return std::make_shared<HttpScorer>(config.url, config.timeout);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scorer transport");
}

// --- ScoreHttpServer --------------------------------------------------------

class ScoreHttpServer::Impl {
 public:
  explicit Impl(std::shared_ptr<const Scorer> scorer)
      : scorer_(std::move(scorer)) {
    server_.Post("/score", [this](const httplib::Request& req,
                                  httplib::Response& res) {
      try {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_array()) {
          throw Error(ErrorCode::kProtocolError,
                      "request body must be a JSON array");
        }
        std::vector<ScoreRequest> batch;
        for (const json& item : body) {
          batch.push_back(RequestFromObject(item, item.dump()));
        }
        std::vector<SentencePair> pairs;
        for (const ScoreRequest& r : batch) pairs.push_back(r.pair);
        const std::vector<double> scores = scorer_->ScoreBatch(pairs);
        json out = json::array();
        for (std::size_t i = 0; i < batch.size(); ++i) {
          out.push_back({{"id", batch[i].id}, {"score", scores[i]}});
        }
        res.set_content(out.dump(), "application/json");
      } catch (const Error& e) {
        res.status = 400;
        res.set_content(json{{"code", ErrorCodeName(e.code())},
                             {"message", e.what()}}
                            .dump(),
                        "application/json");
      }
    });
  }

  ~Impl() { Stop(); }

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
  std::shared_ptr<const Scorer> scorer_;
  httplib::Server server_;
  std::thread thread_;
};

ScoreHttpServer::ScoreHttpServer(std::shared_ptr<const Scorer> scorer)
    : impl_(std::make_unique<Impl>(std::move(scorer))) {}

ScoreHttpServer::~ScoreHttpServer() = default;

int ScoreHttpServer::Start(const std::string& host, int port) {
  return impl_->Start(host, port);
}

void ScoreHttpServer::Listen(const std::string& host, int port) {
  impl_->Listen(host, port);
}

void ScoreHttpServer::Stop() { impl_->Stop(); }

}  // namespace divex
