// Reference implementations used by the tests. They are written from the
// definitions and share no code with the library beyond plain data types.

#ifndef DIVEX_TESTS_ORACLES_H_
#define DIVEX_TESTS_ORACLES_H_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace divex::oracle {

using Words = std::vector<std::string>;
using Links = std::set<std::pair<std::size_t, std::size_t>>;
using Lexicon = std::set<std::pair<std::string, std::string>>;

// (src_start, src_end, tgt_start, tgt_end), half-open; empty side is (0, 0).
using Box = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;

inline std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool Consistent(std::size_t s0, std::size_t s1, std::size_t t0,
                       std::size_t t1, const Links& links) {
  bool inside = false;
  for (const auto& [i, j] : links) {
    const bool in_s = i >= s0 && i < s1;
    const bool in_t = j >= t0 && j < t1;
    if (in_s != in_t) return false;
    inside |= in_s && in_t;
  }
  return inside;
}

// Every box over the pair: two-sided consistent boxes (each side at most
// max_len when set) and maximal unaligned runs on either side.
inline std::set<Box> PhraseBoxes(std::size_t ns, std::size_t nt, const Links& links,
                                 std::optional<std::size_t> max_len = {}) {
  std::set<Box> out;
  for (std::size_t s0 = 0; s0 < ns; ++s0) {
    for (std::size_t s1 = s0 + 1; s1 <= ns; ++s1) {
      for (std::size_t t0 = 0; t0 < nt; ++t0) {
        for (std::size_t t1 = t0 + 1; t1 <= nt; ++t1) {
          if (max_len && (s1 - s0 > *max_len || t1 - t0 > *max_len)) continue;
          if (Consistent(s0, s1, t0, t1, links)) out.insert({s0, s1, t0, t1});
        }
      }
    }
  }
  std::vector<bool> src_aligned(ns, false), tgt_aligned(nt, false);
  for (const auto& [i, j] : links) {
    src_aligned[i] = true;
    tgt_aligned[j] = true;
  }
  const auto runs = [](const std::vector<bool>& aligned) {
    std::vector<std::pair<std::size_t, std::size_t>> r;
    std::size_t k = 0;
    while (k < aligned.size()) {
      if (aligned[k]) {
        ++k;
        continue;
      }
      std::size_t e = k;
      while (e < aligned.size() && !aligned[e]) ++e;
      r.emplace_back(k, e);
      k = e;
    }
    return r;
  };
  for (const auto& [a, b] : runs(src_aligned)) out.insert({a, b, 0, 0});
  for (const auto& [a, b] : runs(tgt_aligned)) out.insert({0, 0, a, b});
  return out;
}

inline double LexicalScore(const Words& src, const Words& tgt, const Lexicon& lex) {
  std::vector<bool> used(tgt.size(), false);
  std::size_t matched = 0;
  for (const std::string& s : src) {
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      if (used[j]) continue;
      const std::string ls = Lower(s), lt = Lower(tgt[j]);
      if (ls == lt || lex.count({ls, lt})) {
        used[j] = true;
        ++matched;
        break;
      }
    }
  }
  const double n = static_cast<double>(src.size() + tgt.size());
  return (4.0 * static_cast<double>(matched) - n) / n;
}

inline Words Erase(const Words& w, std::size_t a, std::size_t b) {
  Words out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (k < a || k >= b) out.push_back(w[k]);
  }
  return out;
}

struct Choice {
  Box box;
  double score_del = 0.0;
  double objective = 0.0;
};

// Exhaustive first step: scores every erasure from the enumerated table and
// picks the best one by (objective, score_del, shorter, earlier starts,
// earlier ends). nullopt when no erasure gains more than epsilon.
inline std::optional<Choice> BestFirstErasure(const Words& src, const Words& tgt,
                                              const Links& links, const Lexicon& lex,
                                              double epsilon, bool brevity) {
  const double base = LexicalScore(src, tgt, lex);
  const double total = static_cast<double>(src.size() + tgt.size());
  std::optional<Choice> best;
  std::size_t best_len = 0;
  for (const Box& box : PhraseBoxes(src.size(), tgt.size(), links)) {
    const auto [s0, s1, t0, t1] = box;
    const Words rs = Erase(src, s0, s1);
    const Words rt = Erase(tgt, t0, t1);
    if (rs.empty() || rt.empty()) continue;
    const double del = LexicalScore(rs, rt, lex);
    if (!(del > base + epsilon)) continue;
    const std::size_t len = (s1 - s0) + (t1 - t0);
    const double sign = del >= 0 ? -1.0 : 1.0;
    const double obj = brevity ? del * std::exp(sign * static_cast<double>(len) / total) : del;
    bool take = !best;
    if (best) {
      const auto key = [](double o, double d, std::size_t l, const Box& b) {
        const auto [a0, a1, b0, b1] = b;
        return std::make_tuple(-o, -d, l, a0, b0, a1, b1);
      };
      take = key(obj, del, len, box) < key(best->objective, best->score_del, best_len, best->box);
    }
    if (take) {
      best = Choice{box, del, obj};
      best_len = len;
    }
  }
  return best;
}

}  // namespace divex::oracle

#endif  // DIVEX_TESTS_ORACLES_H_
