#ifndef DIVEX_EXTERNAL_SCORER_H_
#define DIVEX_EXTERNAL_SCORER_H_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divex/core.h"
#include "divex/scorer.h"

namespace divex {

// Scoring wire protocol, shared by the subprocess and HTTP transports.
//
// Stream form (subprocess stdio): the client writes one JSON object per line,
//   {"id": "...", "src": "...", "tgt": "..."}
// and ends the batch with a blank line. The server answers with one
//   {"id": "...", "score": <number>}
// line per request, then a blank line. Ids are echoed back verbatim; the
// src/tgt texts are the tokens joined by single spaces.
//
// HTTP form: POST /score with a JSON array of request objects; the response
// body is a JSON array of response objects.

struct ScoreRequest {
  std::string id;
  SentencePair pair;
};

struct ScoreResponse {
  std::string id;
  double score = 0.0;
};

std::string EncodeScoreRequest(std::string_view id, const SentencePair& pair);
ScoreRequest DecodeScoreRequest(std::string_view line);
std::string EncodeScoreResponse(std::string_view id, double score);
ScoreResponse DecodeScoreResponse(std::string_view line);

// Answers stream-form batches from `in` on `out` until end of input. A
// pending batch without a trailing blank line is answered at end of input.
void ServeScoreStream(std::istream& in, std::ostream& out,
                      const Scorer& scorer);

// Scorer whose scores come over a wire. Counts what is actually sent.
class WireScorer : public Scorer {
 public:
  std::size_t wire_calls() const { return wire_calls_.load(); }
  std::size_t wire_pairs() const { return wire_pairs_.load(); }

 protected:
  void CountCall(std::size_t pairs) const {
    wire_calls_.fetch_add(1);
    wire_pairs_.fetch_add(pairs);
  }

 private:
  mutable std::atomic<std::size_t> wire_calls_{0};
  mutable std::atomic<std::size_t> wire_pairs_{0};
};

// Runs `command` through /bin/sh and speaks the stream protocol over its
// stdin/stdout. The child is started lazily and restarted after a failure.
// Wire calls are serialized.
class SubprocessScorer : public WireScorer {
 public:
  SubprocessScorer(std::string command, std::chrono::milliseconds timeout);
  ~SubprocessScorer() override;

  SubprocessScorer(const SubprocessScorer&) = delete;
  SubprocessScorer& operator=(const SubprocessScorer&) = delete;

  std::vector<double> ScoreBatch(
      std::span<const SentencePair> pairs) const override;

 private:
  class Process;

  std::string command_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mu_;
  mutable std::unique_ptr<Process> process_;
};

// POSTs batches to an HTTP endpoint, e.g. "http://127.0.0.1:8080/score".
class HttpScorer : public WireScorer {
 public:
  HttpScorer(std::string url, std::chrono::milliseconds timeout);
  ~HttpScorer() override;

  std::vector<double> ScoreBatch(
      std::span<const SentencePair> pairs) const override;

 private:
  std::string base_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mu_;
};

struct ExternalScorerConfig {
  enum class Transport { kSubprocess, kHttp };

  Transport transport = Transport::kSubprocess;
  std::string command;  // kSubprocess
  std::string url;      // kHttp
  std::chrono::milliseconds timeout{30000};
};

// The transport described by `config`.
std::shared_ptr<WireScorer> MakeWireScorer(const ExternalScorerConfig& config);

// Serves the HTTP form of the protocol for a local scorer. Used by the stub
// scorer tool and by tests.
class ScoreHttpServer {
 public:
  explicit ScoreHttpServer(std::shared_ptr<const Scorer> scorer);
  ~ScoreHttpServer();

  ScoreHttpServer(const ScoreHttpServer&) = delete;
  ScoreHttpServer& operator=(const ScoreHttpServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Returns the bound port.
  int Start(const std::string& host, int port);
  // Serves on the calling thread until Stop().
  void Listen(const std::string& host, int port);
  void Stop();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace divex

#endif  // DIVEX_EXTERNAL_SCORER_H_
