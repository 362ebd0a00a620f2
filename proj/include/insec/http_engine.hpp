#pragma once

#include <chrono>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "insec/engine.hpp"
#include "insec/errors.hpp"
#include "insec/random.hpp"

namespace insec {

namespace detail {

inline void replace_once(std::string& text, std::string_view marker,
                         std::string_view value) {
  const auto pos = text.find(marker);
  if (pos == std::string::npos) return;
  text.replace(pos, marker.size(), value);
}

inline std::size_t count_occurrences(std::string_view text,
                                     std::string_view marker) {
  std::size_t count = 0, pos = 0;
  while ((pos = text.find(marker, pos)) != std::string_view::npos) {
    ++count;
    pos += marker.size();
  }
  return count;
}

/// Truncate at the first occurrence of any stop sequence.
inline std::string apply_stop(std::string text,
                              const std::vector<std::string>& stop) {
  std::size_t cut = text.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    const auto pos = text.find(s);
    if (pos != std::string::npos) cut = std::min(cut, pos);
  }
  text.resize(cut);
  return text;
}

}  // namespace detail

/// Adapter for fill-in-the-middle HTTP APIs (OpenAI-style completion
/// endpoints). POSTs JSON {model, prompt, temperature, n, max_tokens, stop}
/// to base_url, bearer token from the configured environment variable.
/// Batches may be split into several requests; up to max_in_flight are kept
/// outstanding and results are reassembled into request order.
class HttpFimEngine : public CompletionEngine {
 public:
  explicit HttpFimEngine(EngineSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind != EngineSpec::Kind::http_fim) {
      throw Error(Errc::config_error, "HttpFimEngine requires kind=http_fim");
    }
    if (detail::count_occurrences(spec_.prompt_template, "{{PREFIX}}") != 1 ||
        detail::count_occurrences(spec_.prompt_template, "{{SUFFIX}}") != 1) {
      throw Error(Errc::config_error,
                  "prompt_template must contain {{PREFIX}} and {{SUFFIX}} "
                  "exactly once");
    }
    const auto scheme_end = spec_.base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(Errc::config_error, "base_url must include a scheme");
    }
    const auto path_start = spec_.base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      host_ = spec_.base_url;
      path_ = "/";
    } else {
      host_ = spec_.base_url.substr(0, path_start);
      path_ = spec_.base_url.substr(path_start);
    }
    jitter_.seed(static_cast<std::uint64_t>(
        std::chrono::steady_clock::now().time_since_epoch().count()));
  }

  const EngineSpec& spec() const { return spec_; }

  UsageStats usage() const override { return counters_.snapshot(); }

 protected:
  CompletionBatch do_complete(std::string_view prefix, std::string_view suffix,
                              int n) override {
    const std::string token = bearer_token();

    // Split the batch into per-request choice counts.
    const int per_request =
        spec_.choices_per_request > 0 ? spec_.choices_per_request : n;
    std::vector<int> request_sizes;
    for (int remaining = n; remaining > 0; remaining -= per_request) {
      request_sizes.push_back(std::min(per_request, remaining));
    }

    std::vector<std::vector<std::string>> results(request_sizes.size());
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
      while (true) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= request_sizes.size()) return;
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error) return;
        }
        try {
          results[idx] =
              run_request(prefix, suffix, request_sizes[idx], token);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };

    const std::size_t thread_count = std::min<std::size_t>(
        std::max(1, spec_.max_in_flight), request_sizes.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    CompletionBatch batch;
    for (auto& chunk : results) {
      batch.query_count += 1;
      for (auto& completion : chunk)
        batch.completions.push_back(std::move(completion));
    }
    return batch;
  }

 private:
  std::string bearer_token() const {
    if (spec_.api_key_env.empty()) return {};
    const char* value = std::getenv(spec_.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
      throw Error(Errc::auth_missing,
                  "environment variable " + spec_.api_key_env + " is not set");
    }
    return value;
  }

  nlohmann::json build_body(std::string_view prefix, std::string_view suffix,
                            int n) const {
    std::string prompt = spec_.prompt_template;
    detail::replace_once(prompt, "{{PREFIX}}", prefix);
    detail::replace_once(prompt, "{{SUFFIX}}",
                         spec_.suffix_field.empty() ? suffix : "");
    nlohmann::json body{{"model", spec_.model},
                        {"prompt", prompt},
                        {"temperature", spec_.temperature},
                        {"n", n},
                        {"max_tokens", spec_.max_tokens},
                        {"stop", spec_.stop}};
    if (!spec_.suffix_field.empty()) body[spec_.suffix_field] = suffix;
    return body;
  }

  std::vector<std::string> run_request(std::string_view prefix,
                                       std::string_view suffix, int n,
                                       const std::string& token) {
    const nlohmann::json body = build_body(prefix, suffix, n);
    const std::string payload = body.dump();

    std::string last_failure = "no attempts made";
    for (int attempt = 0; attempt <= spec_.retry.max_retries; ++attempt) {
      if (attempt > 0) backoff(attempt);

      httplib::Client client(host_);
      client.set_connection_timeout(30);
      client.set_read_timeout(120);
      httplib::Headers headers;
      if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

      counters_.add(1, static_cast<std::int64_t>(payload.size()), 0);
      auto res = client.Post(path_, headers, payload, "application/json");

      if (!res) {
        last_failure = "connection error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_failure = "http status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw Error(Errc::engine_unavailable,
                    "http status " + std::to_string(res->status));
      }
      return parse_completions(res->body, n);
    }
    throw Error(Errc::engine_unavailable,
                "retries exhausted; last failure: " + last_failure);
  }

  std::vector<std::string> parse_completions(const std::string& body, int n) {
    nlohmann::json response;
    try {
      response = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::malformed_response, e.what());
    }
    if (!response.contains("choices") || !response["choices"].is_array()) {
      throw Error(Errc::malformed_response, "response has no choices array");
    }
    std::vector<std::string> completions;
    std::int64_t out_chars = 0;
    for (const auto& choice : response["choices"]) {
      if (!choice.contains("text") || !choice["text"].is_string()) {
        throw Error(Errc::malformed_response, "choice has no text field");
      }
      auto text =
          detail::apply_stop(choice["text"].get<std::string>(), spec_.stop);
      out_chars += static_cast<std::int64_t>(text.size());
      completions.push_back(std::move(text));
    }
    counters_.add(0, 0, out_chars);
    if (completions.size() != static_cast<std::size_t>(n)) {
      throw Error(Errc::malformed_response,
                  "response carried " + std::to_string(completions.size()) +
                      " choices, expected " + std::to_string(n));
    }
    return completions;
  }

  void backoff(int attempt) {
    double jitter;
    {
      std::lock_guard<std::mutex> lock(jitter_mutex_);
      jitter = 0.5 + hash_to_unit(jitter_());
    }
    const double seconds = spec_.retry.backoff_base_seconds *
                           static_cast<double>(1ull << (attempt - 1)) * jitter;
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

  EngineSpec spec_;
  std::string host_;
  std::string path_;
  UsageCounters counters_;
  Rng jitter_;
  std::mutex jitter_mutex_;
};

}  // namespace insec
