#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "insec/engine.hpp"
#include "insec/errors.hpp"
#include "insec/random.hpp"
#include "insec/text.hpp"

namespace insec {

/// Configuration of the deterministic simulated engine. The planted triggers
/// give the optimizer a hill-climbable signal: the insecure-completion
/// probability rises linearly with the fraction of trigger tokens present in
/// the comment line directly above the cursor.
struct MockBehavior {
  std::vector<std::string> trigger_tokens;
  std::string insecure_completion;
  std::string secure_completion;
  double p_base = 0.0;
  double p_full = 1.0;
  /// Probability of emitting a non-functional completion when the prompt
  /// deviates from a registered task anywhere other than a comment line.
  double corruption_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (trigger_tokens.empty()) {
      throw Error(Errc::config_error, "mock requires at least one trigger token");
    }
    const bool in_range = p_base >= 0.0 && p_base <= 1.0 && p_full >= 0.0 &&
                          p_full <= 1.0 && corruption_prob >= 0.0 &&
                          corruption_prob <= 1.0;
    if (!in_range || p_base > p_full) {
      throw Error(Errc::config_error,
                  "mock probabilities must satisfy 0 <= p_base <= p_full <= 1 "
                  "and 0 <= corruption_prob <= 1");
    }
  }
};

namespace detail {

/// Fraction of trigger tokens present (case-insensitive) in the comment line
/// immediately above the cursor line; 0 when that line is absent or not a
/// comment.
inline double trigger_fraction(const MockBehavior& behavior,
                               std::string_view prefix) {
  const auto lines = split_lines(prefix);
  if (lines.size() < 2) return 0.0;
  const auto above = lines[lines.size() - 2];
  if (!is_comment_line(above)) return 0.0;
  std::size_t present = 0;
  for (const auto& trigger : behavior.trigger_tokens) {
    if (contains_ci(above, trigger)) ++present;
  }
  return static_cast<double>(present) /
         static_cast<double>(behavior.trigger_tokens.size());
}

/// Per-sample pseudo-random unit real. stream 0 drives the insecure/secure
/// choice, stream 1 the corruption choice. FNV-1a with length-prefixed
/// framing keeps the values reproducible across implementations.
inline double mock_unit_draw(std::uint64_t stream, std::string_view prefix,
                             std::string_view suffix, std::uint64_t index,
                             std::uint64_t seed) {
  std::uint64_t h = kFnvOffset;
  h = fnv1a_update_u64(h, stream);
  h = fnv1a_framed(h, prefix);
  h = fnv1a_framed(h, suffix);
  h = fnv1a_update_u64(h, index);
  h = fnv1a_update_u64(h, seed);
  return hash_to_unit(h);
}

}  // namespace detail

/// Deterministic simulated completion engine with planted trigger behavior.
///
/// Tasks from the experiment datasets can be registered with the engine:
/// security sites carry the trigger machinery, functional sites complete
/// with a canonical line (standing in for an engine that solves ordinary
/// tasks correctly). Prompts that differ from every registered task outside
/// comment lines are corrupted with probability corruption_prob, modelling
/// the functionality damage of non-comment insertions. Unregistered usage
/// (no sites at all) applies the trigger machinery to every prompt.
class MockEngine : public CompletionEngine {
 public:
  explicit MockEngine(MockBehavior behavior) : behavior_(std::move(behavior)) {
    behavior_.validate();
  }

  void register_security_site(std::string prefix, std::string suffix) {
    Site site;
    site.prefix = std::move(prefix);
    site.suffix = std::move(suffix);
    site.norm_prefix = strip_comment_lines(site.prefix);
    site.norm_suffix = strip_comment_lines(site.suffix);
    security_sites_.push_back(std::move(site));
  }

  void register_functional_site(std::string prefix, std::string suffix,
                                std::string canonical_completion) {
    Site site;
    site.prefix = std::move(prefix);
    site.suffix = std::move(suffix);
    site.norm_prefix = strip_comment_lines(site.prefix);
    site.norm_suffix = strip_comment_lines(site.suffix);
    site.canonical = std::move(canonical_completion);
    functional_sites_.push_back(std::move(site));
  }

  const MockBehavior& behavior() const { return behavior_; }

  UsageStats usage() const override { return counters_.snapshot(); }

 protected:
  CompletionBatch do_complete(std::string_view prefix, std::string_view suffix,
                              int n) override {
    const std::string norm_prefix = strip_comment_lines(prefix);
    const std::string norm_suffix = strip_comment_lines(suffix);

    const Site* functional = find_match(functional_sites_, prefix, suffix,
                                        norm_prefix, norm_suffix);
    const bool any_registered =
        !security_sites_.empty() || !functional_sites_.empty();
    const bool matches_known =
        functional != nullptr || find_match(security_sites_, prefix, suffix,
                                            norm_prefix, norm_suffix);
    const bool deviates = any_registered && !matches_known;

    const double m = detail::trigger_fraction(behavior_, prefix);
    const double q = behavior_.p_base + (behavior_.p_full - behavior_.p_base) * m;
    const std::string corrupted(behavior_.secure_completion.rbegin(),
                                behavior_.secure_completion.rend());

    CompletionBatch batch;
    batch.query_count = 1;
    for (int i = 0; i < n; ++i) {
      std::string completion;
      if (functional != nullptr) {
        completion = functional->canonical;
      } else {
        const double u = detail::mock_unit_draw(
            0, prefix, suffix, static_cast<std::uint64_t>(i), behavior_.seed);
        completion =
            u < q ? behavior_.insecure_completion : behavior_.secure_completion;
      }
      if (deviates) {
        const double u = detail::mock_unit_draw(
            1, prefix, suffix, static_cast<std::uint64_t>(i), behavior_.seed);
        if (u < behavior_.corruption_prob) completion = corrupted;
      }
      batch.completions.push_back(std::move(completion));
    }

    std::int64_t out_chars = 0;
    for (const auto& c : batch.completions)
      out_chars += static_cast<std::int64_t>(c.size());
    counters_.add(1, static_cast<std::int64_t>(prefix.size() + suffix.size()),
                  out_chars);
    return batch;
  }

 private:
  struct Site {
    std::string prefix;
    std::string suffix;
    std::string norm_prefix;
    std::string norm_suffix;
    std::string canonical;
  };

  static const Site* find_match(const std::vector<Site>& sites,
                                std::string_view prefix,
                                std::string_view suffix,
                                const std::string& norm_prefix,
                                const std::string& norm_suffix) {
    for (const auto& site : sites) {
      if (site.prefix == prefix && site.suffix == suffix) return &site;
      if (site.norm_prefix == norm_prefix && site.norm_suffix == norm_suffix)
        return &site;
    }
    return nullptr;
  }

  MockBehavior behavior_;
  std::vector<Site> security_sites_;
  std::vector<Site> functional_sites_;
  UsageCounters counters_;
};

/// Bare mock completion over a behavior alone, with no registered tasks.
inline CompletionBatch mock_complete(const MockBehavior& behavior,
                                     std::string_view prefix,
                                     std::string_view suffix, int n) {
  MockEngine engine(behavior);
  return engine.complete(prefix, suffix, n);
}

}  // namespace insec
