#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "insec/errors.hpp"

namespace insec {

struct RetryPolicy {
  int max_retries = 3;
  double backoff_base_seconds = 0.5;
};

/// Black-box completion engine configuration.
struct EngineSpec {
  enum class Kind { http_fim, mock };

  Kind kind = Kind::mock;

  // http_fim only.
  std::string base_url;
  std::string model;
  std::string api_key_env;
  /// Prompt template realizing the engine-side pre-processing f_pre. Must
  /// contain {{PREFIX}} and {{SUFFIX}} exactly once. When suffix_field is
  /// empty the rendered template is sent as a single inline prompt; when set
  /// (e.g. "suffix"), the suffix is sent in that JSON field instead and the
  /// {{SUFFIX}} marker renders empty.
  std::string prompt_template = "{{PREFIX}}{{SUFFIX}}";
  std::string suffix_field;
  std::vector<std::string> stop = {"\n\n"};
  int max_tokens = 64;
  int max_in_flight = 4;
  /// 0 = sample all n completions in one API call; otherwise split the batch
  /// into requests of at most this many choices.
  int choices_per_request = 0;
  RetryPolicy retry;

  double temperature = 0.4;
};

struct CompletionBatch {
  std::vector<std::string> completions;
  std::int64_t query_count = 0;
};

struct UsageStats {
  std::int64_t requests = 0;
  std::int64_t input_chars = 0;
  std::int64_t output_chars = 0;
};

/// Black-box engine interface: the attack pipeline reads nothing from an
/// engine other than completion text and usage counters.
class CompletionEngine {
 public:
  virtual ~CompletionEngine() = default;

  /// Sample n completions for the (prefix, suffix) hole. A short batch is an
  /// error, never a silent truncation.
  CompletionBatch complete(std::string_view prefix, std::string_view suffix,
                           int n) {
    if (n < 1) {
      throw Error(Errc::precondition, "complete requires n >= 1");
    }
    CompletionBatch batch = do_complete(prefix, suffix, n);
    if (batch.completions.size() != static_cast<std::size_t>(n)) {
      throw Error(Errc::malformed_response,
                  "engine returned " +
                      std::to_string(batch.completions.size()) +
                      " completions, expected " + std::to_string(n));
    }
    return batch;
  }

  virtual UsageStats usage() const = 0;

 protected:
  virtual CompletionBatch do_complete(std::string_view prefix,
                                      std::string_view suffix, int n) = 0;
};

/// Shared atomic usage counters; engines may be queried from several threads.
class UsageCounters {
 public:
  void add(std::int64_t requests, std::int64_t input_chars,
           std::int64_t output_chars) {
    requests_ += requests;
    input_chars_ += input_chars;
    output_chars_ += output_chars;
  }

  UsageStats snapshot() const {
    return UsageStats{requests_.load(), input_chars_.load(),
                      output_chars_.load()};
  }

 private:
  std::atomic<std::int64_t> requests_{0};
  std::atomic<std::int64_t> input_chars_{0};
  std::atomic<std::int64_t> output_chars_{0};
};

}  // namespace insec
