#include "divex/scorer.h"

#include <cmath>
#include <fstream>
#include <sstream>

namespace divex {

double Scorer::Score(const SentencePair& pair) const {
  return ScoreBatch(std::span<const SentencePair>(&pair, 1)).front();
}

std::string ToLowerAscii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

BilingualLexicon::BilingualLexicon(
    std::initializer_list<std::pair<std::string_view, std::string_view>>
        entries) {
  for (const auto& [s, t] : entries) Add(s, t);
}

void BilingualLexicon::Add(std::string_view src, std::string_view tgt) {
  entries_.emplace(ToLowerAscii(src), ToLowerAscii(tgt));
}

bool BilingualLexicon::Matches(std::string_view src,
                               std::string_view tgt) const {
  std::string s = ToLowerAscii(src);
  std::string t = ToLowerAscii(tgt);
  if (s == t) return true;
  return entries_.count(std::make_pair(std::move(s), std::move(t))) > 0;
}

BilingualLexicon BilingualLexicon::Parse(std::string_view text) {
  BilingualLexicon lexicon;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::string src, tgt, extra;
    if (!(fields >> src >> tgt) || (fields >> extra)) {
      throw Error(ErrorCode::kParseError,
                  "lexicon line " + std::to_string(line_no) +
                      ": expected two fields");
    }
    lexicon.Add(src, tgt);
  }
  return lexicon;
}

std::string BilingualLexicon::Serialize() const {
  std::string out;
  for (const auto& [src, tgt] : entries_) {
    out += src;
    out += '\t';
    out += tgt;
    out += '\n';
  }
  return out;
}

BilingualLexicon BilingualLexicon::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open lexicon " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

double LexicalScore(const SentencePair& pair, const BilingualLexicon& lexicon) {
  if (pair.src.empty() || pair.tgt.empty()) {
    throw Error(ErrorCode::kEmptySide,
                "cannot score pair '" + pair.id + "' with an empty side");
  }
  std::vector<bool> claimed(pair.tgt.size(), false);
  std::size_t matched = 0;
  for (const Token& s : pair.src) {
    for (std::size_t j = 0; j < pair.tgt.size(); ++j) {
      if (!claimed[j] && lexicon.Matches(s, pair.tgt[j])) {
        claimed[j] = true;
        ++matched;
        break;
      }
    }
  }
  const double total = static_cast<double>(pair.TotalLength());
  return (4.0 * static_cast<double>(matched) - total) / total;
}

std::vector<double> LexicalScorer::ScoreBatch(
    std::span<const SentencePair> pairs) const {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const SentencePair& p : pairs) scores.push_back(LexicalScore(p, lexicon_));
  return scores;
}

std::vector<double> CachingScorer::ScoreBatch(
    std::span<const SentencePair> pairs) const {
  std::vector<double> scores(pairs.size(), 0.0);
  std::vector<SentencePair> pending;
  // For every pending pair, the output slots waiting for it.
  std::vector<std::vector<std::size_t>> slots;
  {
    std::lock_guard<std::mutex> lock(mu_);
    std::map<Key, std::size_t> pending_index;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      Key key{pairs[i].src, pairs[i].tgt};
      if (auto it = cache_.find(key); it != cache_.end()) {
        scores[i] = it->second;
        ++hits_;
        continue;
      }
      auto [it, inserted] = pending_index.emplace(std::move(key), pending.size());
      if (inserted) {
        pending.push_back(pairs[i]);
        slots.emplace_back();
        ++misses_;
      } else {
        ++hits_;
      }
      slots[it->second].push_back(i);
    }
  }
  if (pending.empty()) return scores;

  const std::vector<double> fresh = inner_->ScoreBatch(pending);
  if (fresh.size() != pending.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "scorer returned " + std::to_string(fresh.size()) +
                    " scores for " + std::to_string(pending.size()) +
                    " pairs");
  }
  std::lock_guard<std::mutex> lock(mu_);
  for (std::size_t k = 0; k < pending.size(); ++k) {
    if (!std::isfinite(fresh[k])) {
      throw Error(ErrorCode::kProtocolError,
                  "scorer returned a non-finite score for pair '" +
                      pending[k].id + "'");
    }
    cache_.emplace(Key{pending[k].src, pending[k].tgt}, fresh[k]);
    for (std::size_t slot : slots[k]) scores[slot] = fresh[k];
  }
  return scores;
}

std::size_t CachingScorer::hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}

std::size_t CachingScorer::misses() const {
  std::lock_guard<std::mutex> lock(mu_);
  return misses_;
}

}  // namespace divex
