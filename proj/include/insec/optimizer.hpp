#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "insec/attack_template.hpp"
#include "insec/corpus.hpp"
#include "insec/engine.hpp"
#include "insec/errors.hpp"
#include "insec/init.hpp"
#include "insec/metrics.hpp"
#include "insec/random.hpp"
#include "insec/tokenizer.hpp"

namespace insec {

struct OptimizeConfig {
  int n_pool = 20;
  int n_sigma = 5;
  int n_iterations = 20;
  int samples_per_task = 16;
  std::uint64_t seed = 0;
  AttackTemplate attack_template;
  std::optional<std::int64_t> query_budget;
  InitSchemes schemes;

  void validate() const {
    if (n_pool < 1 || n_sigma < 1 || n_iterations < 1 || samples_per_task < 1) {
      throw Error(Errc::config_error,
                  "optimize counts (n_pool, n_sigma, n_iterations, "
                  "samples_per_task) must all be >= 1");
    }
  }
};

/// Per-candidate vulnerability scores, in evaluated pool order.
struct ScoreCard {
  struct Entry {
    AttackString sigma;
    double score = 0.0;
  };
  std::vector<Entry> entries;
};

/// Indices of the n highest scores, descending, ties broken by lower index.
inline std::vector<std::size_t> select_top_indices(
    const std::vector<double>& scores, std::size_t n) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&scores](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  order.resize(std::min(n, order.size()));
  return order;
}

/// How many positions to resample, and which. count ~ Uniform{1..n_sigma}
/// (never zero: the unmutated parent stays in contention through the merge
/// step), positions drawn without replacement.
struct MutationPlan {
  std::size_t count = 0;
  std::vector<std::size_t> positions;
};

template <typename G>
MutationPlan sample_mutation_plan(G& rng, int n_sigma) {
  MutationPlan plan;
  plan.count = static_cast<std::size_t>(
                   uniform_below(rng, static_cast<std::uint64_t>(n_sigma))) +
               1;
  plan.positions = sample_distinct_indices(
      rng, static_cast<std::size_t>(n_sigma), plan.count);
  return plan;
}

/// Randomly mutate an attack string: sample a mutation plan and replace each
/// chosen token with a uniformly random vocabulary token.
template <typename G>
AttackString mutate(const AttackString& sigma, int n_sigma,
                    const AttackTokenizer& tok, G& rng) {
  const auto target = static_cast<std::size_t>(n_sigma);
  if (sigma.tokens.size() != target) {
    throw Error(Errc::length_mismatch,
                "expected " + std::to_string(n_sigma) + " tokens, got " +
                    std::to_string(sigma.tokens.size()));
  }
  const MutationPlan plan = sample_mutation_plan(rng, n_sigma);

  TokenSeq tokens = sigma.tokens;
  for (const std::size_t i : plan.positions) {
    tokens[i] = tok.random_token_from_vocab(rng);
  }
  AttackString out;
  out.text = tok.tokens_to_string(tokens);
  out.tokens = std::move(tokens);
  out.origin = Origin::mutated;
  return out;
}

namespace detail {

class ScoreCache {
 public:
  double score(const AttackString& sigma, CompletionEngine& engine,
               const std::vector<CompletionTask>& tasks,
               const std::map<std::string, std::vector<RuleSet>>& rules,
               const AttackTemplate& tmpl, int samples_per_task) {
    const auto it = cache_.find(sigma.text);
    if (it != cache_.end()) return it->second;
    const double value =
        vul_ratio(engine, tasks, rules, samples_per_task, &tmpl, &sigma.text)
            .overall;
    cache_.emplace(sigma.text, value);
    return value;
  }

 private:
  std::map<std::string, double> cache_;
};

inline ScoreCard score_pool(
    const std::vector<AttackString>& pool, CompletionEngine& engine,
    const std::vector<CompletionTask>& tasks,
    const std::map<std::string, std::vector<RuleSet>>& rules,
    const AttackTemplate& tmpl, int samples_per_task, ScoreCache* cache) {
  ScoreCard card;
  ScoreCache local;
  ScoreCache& effective = cache != nullptr ? *cache : local;
  for (const auto& sigma : pool) {
    const double value =
        effective.score(sigma, engine, tasks, rules, tmpl, samples_per_task);
    card.entries.push_back(ScoreCard::Entry{sigma, value});
  }
  return card;
}

inline std::vector<AttackString> take_top(const ScoreCard& card, std::size_t n) {
  std::vector<double> scores;
  scores.reserve(card.entries.size());
  for (const auto& entry : card.entries) scores.push_back(entry.score);
  std::vector<AttackString> out;
  for (const std::size_t i : select_top_indices(scores, n)) {
    out.push_back(card.entries[i].sigma);
  }
  return out;
}

/// Merged pools may repeat a text; keep the earliest occurrence.
inline std::vector<AttackString> dedupe_by_text(
    std::vector<AttackString> pool) {
  std::vector<AttackString> out;
  std::set<std::string> seen;
  for (auto& sigma : pool) {
    if (seen.insert(sigma.text).second) out.push_back(std::move(sigma));
  }
  return out;
}

}  // namespace detail

/// Score every candidate by the vulnerability ratio its attacked engine
/// achieves on the dataset, and keep the n best (descending score, stable).
inline std::vector<AttackString> pick_n_best(
    const std::vector<AttackString>& pool, std::size_t n,
    const std::vector<CompletionTask>& tasks, CompletionEngine& engine,
    const std::map<std::string, std::vector<RuleSet>>& rules,
    const AttackTemplate& tmpl, int samples_per_task) {
  if (pool.empty() || n > pool.size()) {
    throw Error(Errc::precondition,
                "pick_n_best requires a nonempty pool with n <= pool size");
  }
  const ScoreCard card = detail::score_pool(pool, engine, tasks, rules, tmpl,
                                            samples_per_task, nullptr);
  return detail::take_top(card, n);
}

struct OptimizeResult {
  AttackString sigma_final;
  /// history[0] is the initialization scorecard, history[i] the i-th
  /// mutate/select round, all scored on the training set.
  std::vector<ScoreCard> history;
  /// Scores of the final pool on the validation set.
  ScoreCard validation;
  bool budget_exhausted = false;
};

/// The full attack-string optimization loop: initialize a pool, then for
/// n_iterations rounds mutate every member, merge mutants with parents,
/// and keep the n_pool best on the training split. The winner is whichever
/// surviving candidate scores highest on the validation split. Parents are
/// re-scored from a text-keyed cache, which both halves the query load and
/// pins the elitism guarantee (best training score never decreases).
inline OptimizeResult optimize(
    const std::vector<CompletionTask>& train_tasks,
    const std::vector<CompletionTask>& val_tasks, CompletionEngine& engine,
    const std::map<std::string, std::vector<RuleSet>>& rules,
    const AttackTokenizer& tok, const CweKnowledge& knowledge,
    const OptimizeConfig& cfg) {
  cfg.validate();
  if (train_tasks.empty() || val_tasks.empty()) {
    throw Error(Errc::precondition, "optimize requires nonempty train and val");
  }
  const Language language = train_tasks.front().language;
  Rng rng(cfg.seed);
  detail::ScoreCache cache;
  const std::int64_t start_requests = engine.usage().requests;
  const auto requests_used = [&] {
    return engine.usage().requests - start_requests;
  };

  OptimizeResult result;

  std::vector<AttackString> pool = init_pool(
      cfg.schemes, knowledge, &engine, tok, language, rng, cfg.n_sigma);
  ScoreCard init_card =
      detail::score_pool(pool, engine, train_tasks, rules, cfg.attack_template,
                         cfg.samples_per_task, &cache);
  pool = detail::take_top(init_card, static_cast<std::size_t>(cfg.n_pool));
  result.history.push_back(std::move(init_card));

  if (cfg.query_budget && requests_used() > *cfg.query_budget) {
    throw Error(Errc::budget_exhausted,
                "query budget spent during pool initialization");
  }

  for (int iteration = 1; iteration <= cfg.n_iterations; ++iteration) {
    std::vector<AttackString> merged;
    merged.reserve(pool.size() * 2);
    for (const auto& sigma : pool) {
      AttackString mutant = mutate(sigma, cfg.n_sigma, tok, rng);
      if (mutant.tokens.size() != static_cast<std::size_t>(cfg.n_sigma)) {
        // Vocabulary merges across replaced positions can change the token
        // count of the rendered string; re-normalize to the fixed length.
        mutant = truncate_to_length(mutant, tok, cfg.n_sigma, rng);
      }
      merged.push_back(std::move(mutant));
    }
    merged.insert(merged.end(), pool.begin(), pool.end());
    merged = detail::dedupe_by_text(std::move(merged));

    ScoreCard card =
        detail::score_pool(merged, engine, train_tasks, rules,
                           cfg.attack_template, cfg.samples_per_task, &cache);
    pool = detail::take_top(card, static_cast<std::size_t>(cfg.n_pool));
    result.history.push_back(std::move(card));

    if (cfg.query_budget && requests_used() > *cfg.query_budget) {
      result.budget_exhausted = true;
      break;
    }
  }

  result.validation =
      detail::score_pool(pool, engine, val_tasks, rules, cfg.attack_template,
                         cfg.samples_per_task, nullptr);
  result.sigma_final = detail::take_top(result.validation, 1).front();
  return result;
}

}  // namespace insec
