#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insec/corpus.hpp"
#include "insec/engine.hpp"
#include "insec/errors.hpp"
#include "insec/random.hpp"
#include "insec/tokenizer.hpp"

namespace insec {

enum class Origin { todo, critical_token, sanitizer, inversion, random, mutated };

inline const char* origin_name(Origin origin) {
  switch (origin) {
    case Origin::todo: return "todo";
    case Origin::critical_token: return "critical_token";
    case Origin::sanitizer: return "sanitizer";
    case Origin::inversion: return "inversion";
    case Origin::random: return "random";
    case Origin::mutated: return "mutated";
  }
  return "?";
}

/// A candidate attack string. tokens is always the tokenization of text;
/// pool members additionally hold exactly n_sigma tokens.
struct AttackString {
  std::string text;
  TokenSeq tokens;
  Origin origin = Origin::random;

  static AttackString make(std::string text, const AttackTokenizer& tok,
                           Origin origin) {
    AttackString s;
    s.tokens = tok.string_to_tokens(text);
    s.text = std::move(text);
    s.origin = origin;
    return s;
  }
};

struct InsecureExample {
  std::string prefix;
  std::string insecure_line;
};

/// The attacker's general understanding of a target vulnerability, supplied
/// as a knowledge file.
struct CweKnowledge {
  std::string cwe;
  std::vector<std::string> insecure_tokens;
  std::vector<std::string> secure_tokens;
  std::vector<std::string> sanitizers;
  std::vector<InsecureExample> insecure_examples;

  bool empty() const {
    return insecure_tokens.empty() && secure_tokens.empty() &&
           sanitizers.empty() && insecure_examples.empty();
  }
};

/// Knowledge files are JSON documents keyed by CWE id. A missing entry
/// yields empty knowledge, which silently disables the schemes needing it.
inline CweKnowledge load_knowledge(const std::string& path,
                                   const std::string& cwe) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::config_error, "cannot open knowledge file: " + path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error,
                "knowledge file " + path + " is not valid JSON: " + e.what());
  }
  CweKnowledge knowledge;
  knowledge.cwe = cwe;
  if (!doc.contains(cwe)) return knowledge;
  const auto& entry = doc[cwe];
  const auto read_list = [&entry](const char* key,
                                  std::vector<std::string>& target) {
    if (!entry.contains(key)) return;
    for (const auto& value : entry[key]) target.push_back(value.get<std::string>());
  };
  read_list("insecure_tokens", knowledge.insecure_tokens);
  read_list("secure_tokens", knowledge.secure_tokens);
  read_list("sanitizers", knowledge.sanitizers);
  if (entry.contains("insecure_examples")) {
    for (const auto& example : entry["insecure_examples"]) {
      knowledge.insecure_examples.push_back(
          InsecureExample{example.at("prefix").get<std::string>(),
                          example.at("insecure_line").get<std::string>()});
    }
  }
  return knowledge;
}

/// "TODO: fix vul" -- hints at a vulnerability in the following code.
inline AttackString init_todo(const AttackTokenizer& tok) {
  return AttackString::make("TODO: fix vul", tok, Origin::todo);
}

/// "use {t}" per insecure token, "don't use {t}" per secure token.
inline std::vector<AttackString> init_critical_token(const CweKnowledge& k,
                                                     const AttackTokenizer& tok) {
  if (k.insecure_tokens.empty() && k.secure_tokens.empty()) {
    throw Error(Errc::empty_knowledge,
                k.cwe + " has no security-critical tokens");
  }
  std::vector<AttackString> out;
  for (const auto& t : k.insecure_tokens)
    out.push_back(AttackString::make("use " + t, tok, Origin::critical_token));
  for (const auto& t : k.secure_tokens)
    out.push_back(
        AttackString::make("don't use " + t, tok, Origin::critical_token));
  return out;
}

/// "x = {sanitizer}(x)" -- pretends the dangerous value was already cleaned.
inline std::vector<AttackString> init_sanitizer(const CweKnowledge& k,
                                                const AttackTokenizer& tok) {
  if (k.sanitizers.empty()) {
    throw Error(Errc::empty_knowledge, k.cwe + " has no sanitizers");
  }
  std::vector<AttackString> out;
  for (const auto& f : k.sanitizers)
    out.push_back(AttackString::make("x = " + f + "(x)", tok, Origin::sanitizer));
  return out;
}

/// Ask the engine the inverse question: given insecure code below the
/// cursor, what comment would precede it? The cursor sits inside an empty
/// comment directly above the example's insecure line.
inline std::vector<AttackString> init_inversion(CompletionEngine& engine,
                                                const CweKnowledge& k,
                                                Language language, int samples,
                                                const AttackTokenizer& tok) {
  if (k.insecure_examples.empty()) {
    throw Error(Errc::empty_knowledge, k.cwe + " has no insecure examples");
  }
  if (samples < 1) {
    throw Error(Errc::precondition, "inversion requires samples >= 1");
  }
  std::vector<AttackString> out;
  std::set<std::string> seen;
  for (const auto& example : k.insecure_examples) {
    const std::string prefix =
        example.prefix + "\n" + comment_marker(language) + " ";
    const std::string suffix = "\n" + example.insecure_line;
    const auto batch = engine.complete(prefix, suffix, samples);
    for (const auto& completion : batch.completions) {
      const auto first_line = std::string(split_lines(completion).front());
      if (seen.insert(first_line).second) {
        out.push_back(AttackString::make(first_line, tok, Origin::inversion));
      }
    }
  }
  return out;
}

/// count strings of exactly n_sigma uniformly drawn vocabulary tokens.
inline std::vector<AttackString> init_random(const AttackTokenizer& tok,
                                             Rng& rng, int count, int n_sigma) {
  if (count < 1) {
    throw Error(Errc::precondition, "random init requires count >= 1");
  }
  std::vector<AttackString> out;
  for (int i = 0; i < count; ++i) {
    std::string text;
    for (int j = 0; j < n_sigma; ++j) text += tok.random_token_from_vocab(rng);
    out.push_back(AttackString::make(std::move(text), tok, Origin::random));
  }
  return out;
}

/// Force a candidate to exactly n_sigma tokens: truncate at the end, or pad
/// with uniformly random tokens when shorter. Re-tokenizes after every edit
/// so the token sequence always matches the rendered text, even when the
/// vocabulary merges across the pad boundary.
inline AttackString truncate_to_length(const AttackString& candidate,
                                       const AttackTokenizer& tok, int n_sigma,
                                       Rng& rng) {
  const auto target = static_cast<std::size_t>(n_sigma);
  std::string text = candidate.text;
  for (int guard = 0; guard < 1000; ++guard) {
    TokenSeq tokens = tok.string_to_tokens(text);
    if (tokens.size() == target) {
      AttackString out;
      out.text = std::move(text);
      out.tokens = std::move(tokens);
      out.origin = candidate.origin;
      return out;
    }
    if (tokens.size() > target) {
      // Dropping a token suffix never re-shapes the remaining greedy
      // boundaries, so this branch terminates in one pass.
      tokens.resize(target);
      text = tok.tokens_to_string(tokens);
    } else {
      text += tok.random_token_from_vocab(rng);
    }
  }
  throw Error(Errc::vocab_error,
              "vocabulary cannot realize a stable " +
                  std::to_string(n_sigma) + "-token string from: " +
                  candidate.text);
}

struct InitSchemes {
  bool todo = true;
  bool critical_token = true;
  bool sanitizer = true;
  bool inversion = true;
  bool random = true;
  int inversion_samples = 8;
  int random_count = 20;
};

/// Build the initial candidate pool: union of all enabled schemes' outputs,
/// each truncated to n_sigma tokens, de-duplicated by text keeping the first
/// occurrence. Schemes whose knowledge is missing are silently skipped.
inline std::vector<AttackString> init_pool(const InitSchemes& schemes,
                                           const CweKnowledge& knowledge,
                                           CompletionEngine* engine,
                                           const AttackTokenizer& tok,
                                           Language language, Rng& rng,
                                           int n_sigma) {
  std::vector<AttackString> raw;
  if (schemes.todo) {
    raw.push_back(init_todo(tok));
  }
  if (schemes.critical_token &&
      (!knowledge.insecure_tokens.empty() || !knowledge.secure_tokens.empty())) {
    auto batch = init_critical_token(knowledge, tok);
    raw.insert(raw.end(), batch.begin(), batch.end());
  }
  if (schemes.sanitizer && !knowledge.sanitizers.empty()) {
    auto batch = init_sanitizer(knowledge, tok);
    raw.insert(raw.end(), batch.begin(), batch.end());
  }
  if (schemes.inversion && !knowledge.insecure_examples.empty() &&
      engine != nullptr) {
    auto batch = init_inversion(*engine, knowledge, language,
                                schemes.inversion_samples, tok);
    raw.insert(raw.end(), batch.begin(), batch.end());
  }
  if (schemes.random) {
    auto batch = init_random(tok, rng, schemes.random_count, n_sigma);
    raw.insert(raw.end(), batch.begin(), batch.end());
  }

  std::vector<AttackString> pool;
  std::set<std::string> seen;
  for (const auto& candidate : raw) {
    AttackString fixed = truncate_to_length(candidate, tok, n_sigma, rng);
    if (seen.insert(fixed.text).second) pool.push_back(std::move(fixed));
  }
  if (pool.empty()) {
    throw Error(Errc::all_schemes_empty, "no initialization scheme produced a candidate");
  }
  return pool;
}

}  // namespace insec
