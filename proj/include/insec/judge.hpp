#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insec/corpus.hpp"
#include "insec/errors.hpp"

namespace insec {

/// Rule-based vulnerability judgement for one CWE: any insecure pattern
/// match marks the program insecure unless a secure override matches.
/// Programs that would not parse are still judged by pattern matching; a
/// non-match counts as secure, which under-counts conservatively.
struct RuleSet {
  std::string cwe;
  Language applies_to = Language::python;
  std::vector<std::string> insecure_patterns;
  std::vector<std::string> secure_overrides;

  std::vector<std::regex> compiled_insecure;
  std::vector<std::regex> compiled_overrides;

  void compile() {
    if (insecure_patterns.empty()) {
      throw Error(Errc::config_error,
                  "ruleset " + cwe + " has no insecure patterns");
    }
    compiled_insecure.clear();
    compiled_overrides.clear();
    try {
      for (const auto& p : insecure_patterns)
        compiled_insecure.emplace_back(p, std::regex::ECMAScript);
      for (const auto& p : secure_overrides)
        compiled_overrides.emplace_back(p, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(Errc::config_error,
                  "ruleset " + cwe + " has an invalid pattern: " + e.what());
    }
  }
};

struct Verdict {
  bool insecure = false;
  std::optional<std::string> matched_rule;
};

inline Verdict judge_program(const RuleSet& rules, const std::string& program) {
  for (const auto& re : rules.compiled_overrides) {
    if (std::regex_search(program, re)) return Verdict{false, std::nullopt};
  }
  for (std::size_t i = 0; i < rules.compiled_insecure.size(); ++i) {
    if (std::regex_search(program, rules.compiled_insecure[i])) {
      return Verdict{true, rules.insecure_patterns[i]};
    }
  }
  return Verdict{false, std::nullopt};
}

inline RuleSet load_ruleset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::config_error, "cannot open rule file: " + path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error,
                "rule file " + path + " is not valid JSON: " + e.what());
  }
  RuleSet rules;
  rules.cwe = doc.at("cwe").get<std::string>();
  rules.applies_to = parse_language(doc.at("language").get<std::string>());
  for (const auto& p : doc.at("insecure_patterns"))
    rules.insecure_patterns.push_back(p.get<std::string>());
  if (doc.contains("secure_overrides")) {
    for (const auto& p : doc["secure_overrides"])
      rules.secure_overrides.push_back(p.get<std::string>());
  }
  rules.compile();
  return rules;
}

/// Load every *.json ruleset in a directory, keyed by CWE id. Several
/// languages may share a CWE id; all are kept.
inline std::map<std::string, std::vector<RuleSet>> load_rules_dir(
    const std::string& dir) {
  std::map<std::string, std::vector<RuleSet>> rules;
  if (!std::filesystem::is_directory(dir)) {
    throw Error(Errc::config_error, "rules directory not found: " + dir);
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    RuleSet set = load_ruleset(file.string());
    rules[set.cwe].push_back(std::move(set));
  }
  return rules;
}

/// Pick the ruleset for (cwe, language) out of a loaded rules map.
inline const RuleSet& ruleset_for(
    const std::map<std::string, std::vector<RuleSet>>& rules,
    const std::string& cwe, Language language) {
  const auto it = rules.find(cwe);
  if (it != rules.end()) {
    for (const auto& set : it->second) {
      if (set.applies_to == language) return set;
    }
  }
  throw Error(Errc::missing_ruleset, cwe);
}

namespace detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out.push_back(c);
  }
  out += "'";
  return out;
}

inline std::filesystem::path unique_temp_path(const char* stem,
                                              const char* ext) {
  static std::atomic<std::uint64_t> counter{0};
  const auto dir = std::filesystem::temp_directory_path();
  return dir / (std::string(stem) + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter.fetch_add(1)) + ext);
}

}  // namespace detail

/// Bridge to an external analyzer. The program is written to a temp file and
/// the command is invoked as `command <file> <cwe>`; exit code 0 means
/// secure, 1 insecure, anything else is an error. 124 (the timeout utility's
/// code) maps to JudgeTimeout.
inline Verdict judge_external(const std::string& command,
                              const std::string& program,
                              const std::string& cwe,
                              double timeout_seconds = 60.0) {
  namespace fs = std::filesystem;
  const fs::path program_file = detail::unique_temp_path("insec-judge", ".txt");
  const fs::path stderr_file = detail::unique_temp_path("insec-judge", ".err");
  {
    std::ofstream out(program_file, std::ios::binary);
    out << program;
  }

  std::ostringstream cmd;
  cmd << "timeout " << timeout_seconds << "s " << command << " "
      << detail::shell_quote(program_file.string()) << " "
      << detail::shell_quote(cwe) << " 2>"
      << detail::shell_quote(stderr_file.string());
  const int status = std::system(cmd.str().c_str());

  std::string stderr_excerpt;
  {
    std::ifstream err(stderr_file);
    std::string line;
    while (std::getline(err, line) && stderr_excerpt.size() < 512) {
      stderr_excerpt += line;
      stderr_excerpt.push_back('\n');
    }
  }
  std::error_code ec;
  fs::remove(program_file, ec);
  fs::remove(stderr_file, ec);

  if (status < 0 || !WIFEXITED(status)) {
    throw Error(Errc::judge_crashed, "judge process did not exit normally");
  }
  const int exit_code = WEXITSTATUS(status);
  if (exit_code == 0) return Verdict{false, std::nullopt};
  if (exit_code == 1) return Verdict{true, std::string("external:") + cwe};
  if (exit_code == 124) {
    throw Error(Errc::judge_timeout,
                command + " exceeded " + std::to_string(timeout_seconds) + "s");
  }
  throw Error(Errc::judge_crashed, "exit code " + std::to_string(exit_code) +
                                       (stderr_excerpt.empty()
                                            ? std::string()
                                            : "; stderr: " + stderr_excerpt));
}

}  // namespace insec
