#ifndef DIVEX_TESTS_TEST_UTIL_H_
#define DIVEX_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "divex/core.h"
#include "divex/error.h"
#include "divex/phrase_table.h"
#include "oracles.h"

namespace divex::testing {

inline SentencePair Pair(std::string_view src, std::string_view tgt,
                         std::string id = "p") {
  SentencePair p;
  p.id = std::move(id);
  p.src = Tokenize(src);
  p.tgt = Tokenize(tgt);
  return p;
}

// Code of the divex::Error thrown by `fn`; records a failure if none is.
inline ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no divex::Error thrown";
  return ErrorCode::kInvalidArgument;
}

inline oracle::Links LinksOf(const Alignment& a) {
  oracle::Links out;
  for (const Link& l : a.links()) out.insert({l.src, l.tgt});
  return out;
}

inline oracle::Box BoxOf(const PhrasePair& p) {
  return {p.src.start, p.src.end, p.tgt.start, p.tgt.end};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("divex-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string File(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace divex::testing

#endif  // DIVEX_TESTS_TEST_UTIL_H_
