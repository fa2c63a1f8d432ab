#include "divex/core.h"

#include <algorithm>
#include <cstdint>
#include <string>

namespace divex {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptySentence: return "EmptySentence";
    case ErrorCode::kEmptySide: return "EmptySide";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kWouldEmptySide: return "WouldEmptySide";
    case ErrorCode::kInvalidPhrase: return "InvalidPhrase";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyCandidates: return "EmptyCandidates";
    case ErrorCode::kInconsistentHistory: return "InconsistentHistory";
    case ErrorCode::kSideTooShort: return "SideTooShort";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kMissingGold: return "MissingGold";
    case ErrorCode::kStudyNotFound: return "StudyNotFound";
    case ErrorCode::kSessionNotFound: return "SessionNotFound";
    case ErrorCode::kSessionComplete: return "SessionComplete";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kDuplicateSubmission: return "DuplicateSubmission";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

PhrasePair MakePhrase(std::size_t src_start, std::size_t src_end,
                      std::size_t tgt_start, std::size_t tgt_end) {
  PhrasePair p{{src_start, src_end}, {tgt_start, tgt_end}};
  if (p.src.empty()) p.src = {};
  if (p.tgt.empty()) p.tgt = {};
  return p;
}

PhrasePair SourceOnly(std::size_t start, std::size_t end) {
  return MakePhrase(start, end, 0, 0);
}

PhrasePair TargetOnly(std::size_t start, std::size_t end) {
  return MakePhrase(0, 0, start, end);
}

std::size_t TokenMaskPair::CountTrue() const {
  return static_cast<std::size_t>(std::count(src.begin(), src.end(), true) +
                                  std::count(tgt.begin(), tgt.end(), true));
}

TokenMaskPair TokenMaskPair::AllFalse(const SentencePair& pair) {
  return {std::vector<bool>(pair.src.size(), false),
          std::vector<bool>(pair.tgt.size(), false)};
}

std::string_view StopReasonName(StopReason reason) {
  switch (reason) {
    case StopReason::kInitiallyEquivalent: return "initially_equivalent";
    case StopReason::kNoCandidates: return "no_candidates";
    case StopReason::kReachedEquivalence: return "reached_equivalence";
    case StopReason::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

StopReason ParseStopReason(std::string_view name) {
  for (StopReason r :
       {StopReason::kInitiallyEquivalent, StopReason::kNoCandidates,
        StopReason::kReachedEquivalence, StopReason::kIterationLimit}) {
    if (StopReasonName(r) == name) return r;
  }
  throw Error(ErrorCode::kParseError,
              "unknown stop reason '" + std::string(name) + "'");
}

namespace {

// Returns the byte length of the white-space code point starting at `pos`,
// or 0 if the code point there is not white space.
std::size_t WhitespaceLength(std::string_view text, std::size_t pos) {
  const auto byte = [&](std::size_t i) {
    return static_cast<std::uint8_t>(text[i]);
  };
  const std::uint8_t b0 = byte(pos);
  if (b0 == ' ' || (b0 >= 0x09 && b0 <= 0x0D)) return 1;
  const std::size_t left = text.size() - pos;
  if (b0 == 0xC2 && left >= 2) {
    // U+0085 NEXT LINE, U+00A0 NO-BREAK SPACE
    if (byte(pos + 1) == 0x85 || byte(pos + 1) == 0xA0) return 2;
  } else if (b0 == 0xE1 && left >= 3) {
    // U+1680 OGHAM SPACE MARK
    if (byte(pos + 1) == 0x9A && byte(pos + 2) == 0x80) return 3;
  } else if (b0 == 0xE2 && left >= 3) {
    const std::uint8_t b1 = byte(pos + 1);
    const std::uint8_t b2 = byte(pos + 2);
    // U+2000..U+200A, U+2028, U+2029, U+202F
    if (b1 == 0x80 && ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 ||
                       b2 == 0xA9 || b2 == 0xAF)) {
      return 3;
    }
    // U+205F MEDIUM MATHEMATICAL SPACE
    if (b1 == 0x81 && b2 == 0x9F) return 3;
  } else if (b0 == 0xE3 && left >= 3) {
    // U+3000 IDEOGRAPHIC SPACE
    if (byte(pos + 1) == 0x80 && byte(pos + 2) == 0x80) return 3;
  }
  return 0;
}

}  // namespace

TokenList Tokenize(std::string_view text, TokenizeMode mode) {
  TokenList tokens;
  if (mode == TokenizeMode::kPretokenized) {
    if (!text.empty()) {
      std::size_t start = 0;
      while (true) {
        const std::size_t next = text.find(' ', start);
        const std::string_view piece = text.substr(
            start, next == std::string_view::npos ? next : next - start);
        if (piece.empty()) {
          throw Error(ErrorCode::kParseError,
                      "empty token in pretokenized text at byte " +
                          std::to_string(start));
        }
        tokens.emplace_back(piece);
        if (next == std::string_view::npos) break;
        start = next + 1;
      }
    }
  } else {
    std::size_t pos = 0;
    std::size_t token_start = std::string_view::npos;
    while (pos < text.size()) {
      const std::size_t ws = WhitespaceLength(text, pos);
      if (ws > 0) {
        if (token_start != std::string_view::npos) {
          tokens.emplace_back(text.substr(token_start, pos - token_start));
          token_start = std::string_view::npos;
        }
        pos += ws;
      } else {
        if (token_start == std::string_view::npos) token_start = pos;
        ++pos;
      }
    }
    if (token_start != std::string_view::npos) {
      tokens.emplace_back(text.substr(token_start));
    }
  }
  if (tokens.empty()) {
    throw Error(ErrorCode::kEmptySentence, "text contains no tokens");
  }
  return tokens;
}

std::string JoinTokens(const TokenList& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

void CheckPhraseFits(const SentencePair& pair, const PhrasePair& phrase) {
  if (phrase.src.empty() && phrase.tgt.empty()) {
    throw Error(ErrorCode::kInvalidPhrase, "phrase is empty on both sides");
  }
  const auto check = [](const Span& span, std::size_t len, const char* side) {
    if (span.start > span.end || span.end > len) {
      throw Error(ErrorCode::kOutOfRange,
                  std::string(side) + " span [" + std::to_string(span.start) +
                      ", " + std::to_string(span.end) +
                      ") exceeds length " + std::to_string(len));
    }
  };
  check(phrase.src, pair.src.size(), "source");
  check(phrase.tgt, pair.tgt.size(), "target");
}

SentencePair DeletePhrase(const SentencePair& pair, const PhrasePair& phrase) {
  CheckPhraseFits(pair, phrase);
  if (phrase.src.length() == pair.src.size() ||
      phrase.tgt.length() == pair.tgt.size()) {
    throw Error(ErrorCode::kWouldEmptySide,
                "deleting the phrase would empty a side of pair '" + pair.id +
                    "'");
  }
  SentencePair out;
  out.id = pair.id;
  out.src_lang = pair.src_lang;
  out.tgt_lang = pair.tgt_lang;
  const auto erase = [](const TokenList& tokens, const Span& span) {
    TokenList kept;
    kept.reserve(tokens.size() - span.length());
    kept.insert(kept.end(), tokens.begin(),
                tokens.begin() + static_cast<std::ptrdiff_t>(span.start));
    kept.insert(kept.end(),
                tokens.begin() + static_cast<std::ptrdiff_t>(span.end),
                tokens.end());
    return kept;
  };
  out.src = erase(pair.src, phrase.src);
  out.tgt = erase(pair.tgt, phrase.tgt);
  return out;
}

TokenMaskPair MasksFromHighlights(const SentencePair& pair,
                                  const HighlightSet& highlights) {
  TokenMaskPair masks = TokenMaskPair::AllFalse(pair);
  const auto mark = [](std::vector<bool>& mask,
                       const std::vector<std::size_t>& tokens,
                       const Span& span, const char* side) {
    const auto set = [&](std::size_t i) {
      if (i >= mask.size()) {
        throw Error(ErrorCode::kShapeError,
                    std::string(side) + " highlight index " +
                        std::to_string(i) + " exceeds length " +
                        std::to_string(mask.size()));
      }
      mask[i] = true;
    };
    if (!tokens.empty()) {
      for (std::size_t i : tokens) set(i);
    } else {
      for (std::size_t i = span.start; i < span.end; ++i) set(i);
    }
  };
  for (const Highlight& h : highlights.phrases) {
    // Hand-built highlights may omit the explicit token lists.
    const bool explicit_tokens = !h.src_tokens.empty() || !h.tgt_tokens.empty();
    mark(masks.src, h.src_tokens,
         explicit_tokens ? Span{} : h.phrase.src, "source");
    mark(masks.tgt, h.tgt_tokens,
         explicit_tokens ? Span{} : h.phrase.tgt, "target");
  }
  return masks;
}

}  // namespace divex
