#pragma once

#include <stdexcept>
#include <string>

namespace insec {

/// Machine-readable error codes. Each maps to one of the CLI exit
/// categories below.
enum class Errc {
  // config / data
  malformed_record,
  duplicate_id,
  unknown_language,
  indivisible_split,
  newline_in_attack_string,
  multiline_attack_string,
  vocab_error,
  config_error,
  no_records,
  precondition,
  // engine
  engine_unavailable,
  malformed_response,
  auth_missing,
  budget_exhausted,
  // judge / checker
  judge_crashed,
  judge_timeout,
  missing_ruleset,
  checker_failed,
  zero_baseline,
  // init / optimizer
  empty_knowledge,
  all_schemes_empty,
  length_mismatch,
};

enum class ErrorCategory { config, engine, judge };

constexpr ErrorCategory category_of(Errc code) {
  switch (code) {
    case Errc::engine_unavailable:
    case Errc::malformed_response:
    case Errc::auth_missing:
    case Errc::budget_exhausted:
      return ErrorCategory::engine;
    case Errc::judge_crashed:
    case Errc::judge_timeout:
    case Errc::missing_ruleset:
    case Errc::checker_failed:
      return ErrorCategory::judge;
    default:
      return ErrorCategory::config;
  }
}

constexpr const char* errc_name(Errc code) {
  switch (code) {
    case Errc::malformed_record: return "MalformedRecord";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::unknown_language: return "UnknownLanguage";
    case Errc::indivisible_split: return "IndivisibleSplit";
    case Errc::newline_in_attack_string: return "NewlineInAttackString";
    case Errc::multiline_attack_string: return "MultilineAttackString";
    case Errc::vocab_error: return "VocabError";
    case Errc::config_error: return "ConfigError";
    case Errc::no_records: return "NoRecords";
    case Errc::precondition: return "PreconditionViolated";
    case Errc::engine_unavailable: return "EngineUnavailable";
    case Errc::malformed_response: return "MalformedResponse";
    case Errc::auth_missing: return "AuthMissing";
    case Errc::budget_exhausted: return "BudgetExhaustedBeforeFirstIteration";
    case Errc::judge_crashed: return "JudgeCrashed";
    case Errc::judge_timeout: return "JudgeTimeout";
    case Errc::missing_ruleset: return "MissingRuleset";
    case Errc::checker_failed: return "CheckerFailed";
    case Errc::zero_baseline: return "ZeroBaseline";
    case Errc::empty_knowledge: return "EmptyKnowledge";
    case Errc::all_schemes_empty: return "AllSchemesEmpty";
    case Errc::length_mismatch: return "LengthMismatch";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  Errc code_;
};

}  // namespace insec
