#include "divex/phrase_table.h"

#include <algorithm>
#include <charconv>
#include <limits>

namespace divex {

std::vector<bool> Alignment::AlignedSource(std::size_t src_len) const {
  std::vector<bool> aligned(src_len, false);
  for (const Link& l : links_) {
    if (l.src < src_len) aligned[l.src] = true;
  }
  return aligned;
}

std::vector<bool> Alignment::AlignedTarget(std::size_t tgt_len) const {
  std::vector<bool> aligned(tgt_len, false);
  for (const Link& l : links_) {
    if (l.tgt < tgt_len) aligned[l.tgt] = true;
  }
  return aligned;
}

std::string Alignment::ToString() const {
  std::string out;
  for (const Link& l : links_) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.src) + "-" + std::to_string(l.tgt);
  }
  return out;
}

namespace {

bool ParseIndex(std::string_view text, std::size_t& value) {
  if (text.empty()) return false;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

Alignment ParseAlignment(std::string_view text, std::size_t src_len,
                         std::size_t tgt_len) {
  Alignment alignment;
  const TokenList pieces = [&] {
    try {
      return Tokenize(text, TokenizeMode::kWhitespace);
    } catch (const Error&) {
      return TokenList{};
    }
  }();
  for (const std::string& piece : pieces) {
    const std::size_t dash = piece.find('-');
    std::size_t i = 0;
    std::size_t j = 0;
    if (dash == std::string::npos ||
        !ParseIndex(std::string_view(piece).substr(0, dash), i) ||
        !ParseIndex(std::string_view(piece).substr(dash + 1), j)) {
      throw Error(ErrorCode::kParseError,
                  "malformed alignment link '" + piece + "'");
    }
    if (i >= src_len || j >= tgt_len) {
      throw Error(ErrorCode::kParseError,
                  "alignment link '" + piece + "' out of range for lengths " +
                      std::to_string(src_len) + "x" + std::to_string(tgt_len));
    }
    alignment.Add(i, j);
  }
  return alignment;
}

bool IsConsistent(const Span& src_span, const Span& tgt_span,
                  const Alignment& alignment) {
  bool has_inside = false;
  for (const Link& l : alignment.links()) {
    const bool in_src = src_span.Contains(l.src);
    const bool in_tgt = tgt_span.Contains(l.tgt);
    if (in_src != in_tgt) return false;
    if (in_src) has_inside = true;
  }
  return has_inside;
}

namespace {

// Appends each maximal run of unaligned tokens as a one-sided entry.
void AddUnalignedRuns(const std::vector<bool>& aligned, bool source_side,
                      std::set<PhrasePair>& entries) {
  std::size_t i = 0;
  while (i < aligned.size()) {
    if (aligned[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < aligned.size() && !aligned[j]) ++j;
    entries.insert(source_side ? SourceOnly(i, j) : TargetOnly(i, j));
    i = j;
  }
}

}  // namespace

PhraseTable ExtractPhrasePairs(const SentencePair& pair,
                               const Alignment& alignment,
                               std::optional<std::size_t> max_len) {
  const std::size_t ns = pair.src.size();
  const std::size_t nt = pair.tgt.size();
  const std::size_t cap = max_len.value_or(std::numeric_limits<std::size_t>::max());

  // Links grouped by token on each side.
  std::vector<std::vector<std::size_t>> tgt_of(ns);
  std::vector<std::vector<std::size_t>> src_of(nt);
  for (const Link& l : alignment.links()) {
    tgt_of[l.src].push_back(l.tgt);
    src_of[l.tgt].push_back(l.src);
  }
  const std::vector<bool> tgt_aligned = alignment.AlignedTarget(nt);

  PhraseTable table{pair.id, {}};
  for (std::size_t s = 0; s < ns; ++s) {
    std::size_t t_min = std::numeric_limits<std::size_t>::max();
    std::size_t t_max = 0;
    bool any = false;
    for (std::size_t e = s; e < ns && e - s + 1 <= cap; ++e) {
      for (std::size_t t : tgt_of[e]) {
        t_min = std::min(t_min, t);
        t_max = std::max(t_max, t);
        any = true;
      }
      if (!any) continue;
      if (t_max - t_min + 1 > cap) continue;
      // Every link into the target box must come from [s, e].
      bool consistent = true;
      for (std::size_t t = t_min; t <= t_max && consistent; ++t) {
        for (std::size_t i : src_of[t]) {
          if (i < s || i > e) {
            consistent = false;
            break;
          }
        }
      }
      if (!consistent) continue;
      // Source-side unaligned boundary tokens are covered by the outer loops;
      // the target side is widened over adjacent unaligned tokens here.
      for (std::size_t ts = t_min + 1; ts-- > 0;) {
        if (ts < t_min && tgt_aligned[ts]) break;
        for (std::size_t te = t_max; te < nt; ++te) {
          if (te > t_max && tgt_aligned[te]) break;
          if (te - ts + 1 > cap) break;
          table.entries.insert(MakePhrase(s, e + 1, ts, te + 1));
        }
      }
    }
  }
  AddUnalignedRuns(alignment.AlignedSource(ns), true, table.entries);
  AddUnalignedRuns(tgt_aligned, false, table.entries);
  return table;
}

PhraseTable ExtractPhrasePairsBruteForce(const SentencePair& pair,
                                         const Alignment& alignment,
                                         std::optional<std::size_t> max_len) {
  const std::size_t ns = pair.src.size();
  const std::size_t nt = pair.tgt.size();
  const std::size_t cap = max_len.value_or(std::numeric_limits<std::size_t>::max());
  const std::vector<bool> src_aligned = alignment.AlignedSource(ns);
  const std::vector<bool> tgt_aligned = alignment.AlignedTarget(nt);

  PhraseTable table{pair.id, {}};
  for (std::size_t s1 = 0; s1 < ns; ++s1) {
    for (std::size_t e1 = s1 + 1; e1 <= ns; ++e1) {
      for (std::size_t s2 = 0; s2 < nt; ++s2) {
        for (std::size_t e2 = s2 + 1; e2 <= nt; ++e2) {
          if (e1 - s1 > cap || e2 - s2 > cap) continue;
          if (IsConsistent({s1, e1}, {s2, e2}, alignment)) {
            table.entries.insert(MakePhrase(s1, e1, s2, e2));
          }
        }
      }
    }
  }
  // A one-sided span qualifies iff it is all unaligned and cannot grow.
  const auto one_sided = [&](const std::vector<bool>& aligned, bool source) {
    const std::size_t n = aligned.size();
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t e = s + 1; e <= n; ++e) {
        bool all_unaligned = true;
        for (std::size_t i = s; i < e; ++i) all_unaligned &= !aligned[i];
        const bool maximal = (s == 0 || aligned[s - 1]) &&
                             (e == n || aligned[e]);
        if (all_unaligned && maximal) {
          table.entries.insert(source ? SourceOnly(s, e) : TargetOnly(s, e));
        }
      }
    }
  };
  one_sided(src_aligned, true);
  one_sided(tgt_aligned, false);
  return table;
}

}  // namespace divex
