#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "insec/errors.hpp"
#include "insec/random.hpp"
#include "insec/text.hpp"

namespace insec {

/// Token sequence under the attack tokenizer. Concatenating the elements
/// always reproduces the source string.
using TokenSeq = std::vector<std::string>;

/// The attacker's tokenizer. Deliberately independent of the target engine's
/// tokenizer: the unicode kind splits per Unicode scalar, the vocab_file kind
/// does greedy longest-match against a user-supplied vocabulary with
/// single-character fallback for uncovered text.
class AttackTokenizer {
 public:
  enum class Kind { unicode, vocab_file };

  /// Unicode tokenizer over a fixed vocabulary: printable ASCII (0x20-0x7E)
  /// plus the 256 code points U+00A1..U+01A0. The same list is shipped as
  /// data/unicode_vocab_ext.txt.
  static AttackTokenizer unicode() {
    AttackTokenizer tok;
    tok.kind_ = Kind::unicode;
    for (std::uint32_t cp = 0x20; cp <= 0x7E; ++cp)
      tok.vocab_.push_back(encode_utf8(cp));
    for (std::uint32_t cp = 0xA1; cp <= 0x1A0; ++cp)
      tok.vocab_.push_back(encode_utf8(cp));
    return tok;
  }

  static AttackTokenizer from_vocab(std::vector<std::string> vocab) {
    if (vocab.empty()) {
      throw Error(Errc::vocab_error, "vocabulary is empty");
    }
    AttackTokenizer tok;
    tok.kind_ = Kind::vocab_file;
    for (const auto& token : vocab) {
      if (token.empty()) {
        throw Error(Errc::vocab_error, "vocabulary contains an empty token");
      }
      if (token.find('\n') != std::string::npos) {
        throw Error(Errc::vocab_error,
                    "vocabulary token contains a newline: " + token);
      }
      tok.max_token_len_ = std::max(tok.max_token_len_, token.size());
    }
    tok.vocab_ = std::move(vocab);
    tok.lookup_.insert(tok.vocab_.begin(), tok.vocab_.end());
    return tok;
  }

  /// Vocab file format: UTF-8, one token per line, line order = token index.
  static AttackTokenizer from_vocab_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw Error(Errc::vocab_error, "cannot open vocab file: " + path);
    }
    std::vector<std::string> vocab;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      vocab.push_back(line);
    }
    return from_vocab(std::move(vocab));
  }

  Kind kind() const { return kind_; }
  const std::vector<std::string>& vocab() const { return vocab_; }

  TokenSeq string_to_tokens(std::string_view s) const {
    if (s.find('\n') != std::string_view::npos) {
      throw Error(Errc::newline_in_attack_string,
                  "attack strings must be single-line");
    }
    TokenSeq tokens;
    if (kind_ == Kind::unicode) {
      std::size_t pos = 0;
      while (pos < s.size()) {
        std::uint32_t cp = 0;
        const std::size_t len = decode_utf8(s, pos, cp);
        tokens.emplace_back(s.substr(pos, len));
        pos += len;
      }
      return tokens;
    }
    // Greedy longest-match from the left; uncovered characters fall back to
    // single-scalar tokens.
    std::size_t pos = 0;
    while (pos < s.size()) {
      const std::size_t longest = std::min(max_token_len_, s.size() - pos);
      bool matched = false;
      for (std::size_t len = longest; len >= 1; --len) {
        const auto candidate = s.substr(pos, len);
        if (lookup_.contains(std::string(candidate))) {
          tokens.emplace_back(candidate);
          pos += len;
          matched = true;
          break;
        }
      }
      if (!matched) {
        std::uint32_t cp = 0;
        const std::size_t len = decode_utf8(s, pos, cp);
        tokens.emplace_back(s.substr(pos, len));
        pos += len;
      }
    }
    return tokens;
  }

  std::string tokens_to_string(const TokenSeq& tokens) const {
    std::string out;
    for (const auto& token : tokens) out += token;
    return out;
  }

  template <typename G>
  const std::string& random_token_from_vocab(G& rng) const {
    return vocab_[static_cast<std::size_t>(uniform_below(rng, vocab_.size()))];
  }

 private:
  AttackTokenizer() = default;

  Kind kind_ = Kind::unicode;
  std::vector<std::string> vocab_;
  std::unordered_set<std::string> lookup_;
  std::size_t max_token_len_ = 1;
};

}  // namespace insec
