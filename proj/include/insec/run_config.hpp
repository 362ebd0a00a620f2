#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insec/attack_template.hpp"
#include "insec/engine.hpp"
#include "insec/errors.hpp"
#include "insec/mock_engine.hpp"
#include "insec/optimizer.hpp"
#include "insec/random.hpp"

namespace insec {

inline constexpr const char* kVersion = "0.1.0";

struct EvalConfig {
  int vul_samples = 100;
  int func_samples = 40;
  std::vector<int> k_values = {1, 10};
};

struct TokenizerConfig {
  enum class Kind { unicode, vocab_file };
  Kind kind = Kind::unicode;
  std::string vocab_path;
};

/// One experiment = one config file. Relative paths are resolved against the
/// config file's directory; secrets only ever come from the environment.
struct RunConfig {
  EngineSpec engine;
  std::optional<MockBehavior> mock;
  std::string vul_path;
  std::string func_path;
  std::uint64_t split_seed = 0;
  TokenizerConfig tokenizer;
  OptimizeConfig optimize;
  EvalConfig eval;
  std::string knowledge_path;
  std::string rules_dir;
  std::string output_dir = "out";

  std::uint64_t config_hash = 0;

  static RunConfig load(const std::string& path);
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& target) {
  if (doc.contains(key)) target = doc[key].get<T>();
}

inline std::string resolve_path(const std::filesystem::path& base,
                                const std::string& value) {
  if (value.empty()) return value;
  const std::filesystem::path p(value);
  return p.is_absolute() ? p.string() : (base / p).string();
}

inline void require_exists(const std::string& path, const char* what) {
  if (!path.empty() && !std::filesystem::exists(path)) {
    throw Error(Errc::config_error,
                std::string(what) + " does not exist: " + path);
  }
}

inline EngineSpec parse_engine_spec(const nlohmann::json& doc) {
  EngineSpec spec;
  const auto kind = doc.value("kind", std::string("mock"));
  if (kind == "mock") {
    spec.kind = EngineSpec::Kind::mock;
  } else if (kind == "http_fim") {
    spec.kind = EngineSpec::Kind::http_fim;
  } else {
    throw Error(Errc::config_error, "unknown engine kind: " + kind);
  }
  read_field(doc, "base_url", spec.base_url);
  read_field(doc, "model", spec.model);
  read_field(doc, "api_key_env", spec.api_key_env);
  read_field(doc, "prompt_template", spec.prompt_template);
  read_field(doc, "suffix_field", spec.suffix_field);
  read_field(doc, "stop", spec.stop);
  read_field(doc, "max_tokens", spec.max_tokens);
  read_field(doc, "max_in_flight", spec.max_in_flight);
  read_field(doc, "choices_per_request", spec.choices_per_request);
  read_field(doc, "temperature", spec.temperature);
  if (doc.contains("retry")) {
    read_field(doc["retry"], "max_retries", spec.retry.max_retries);
    read_field(doc["retry"], "backoff_base_seconds",
               spec.retry.backoff_base_seconds);
  }
  if (spec.temperature < 0.0 || spec.temperature > 2.0) {
    throw Error(Errc::config_error, "temperature must be in [0, 2]");
  }
  if (spec.max_in_flight < 1) {
    throw Error(Errc::config_error, "max_in_flight must be positive");
  }
  return spec;
}

inline MockBehavior parse_mock_behavior(const nlohmann::json& doc) {
  MockBehavior behavior;
  read_field(doc, "trigger_tokens", behavior.trigger_tokens);
  read_field(doc, "insecure_completion", behavior.insecure_completion);
  read_field(doc, "secure_completion", behavior.secure_completion);
  read_field(doc, "p_base", behavior.p_base);
  read_field(doc, "p_full", behavior.p_full);
  read_field(doc, "corruption_prob", behavior.corruption_prob);
  read_field(doc, "seed", behavior.seed);
  behavior.validate();
  return behavior;
}

inline OptimizeConfig parse_optimize_config(const nlohmann::json& doc) {
  OptimizeConfig cfg;
  read_field(doc, "n_pool", cfg.n_pool);
  read_field(doc, "n_sigma", cfg.n_sigma);
  read_field(doc, "n_iterations", cfg.n_iterations);
  read_field(doc, "samples_per_task", cfg.samples_per_task);
  read_field(doc, "seed", cfg.seed);
  if (doc.contains("query_budget") && !doc["query_budget"].is_null()) {
    cfg.query_budget = doc["query_budget"].get<std::int64_t>();
  }
  if (doc.contains("template")) {
    const auto& tmpl = doc["template"];
    if (tmpl.contains("position")) {
      cfg.attack_template.position =
          parse_position(tmpl["position"].get<std::string>());
    }
    if (tmpl.contains("format")) {
      const auto format = tmpl["format"].get<std::string>();
      if (format == "comment") {
        cfg.attack_template.format = AttackFormat::comment;
      } else if (format == "raw") {
        cfg.attack_template.format = AttackFormat::raw;
      } else {
        throw Error(Errc::config_error, "unknown attack format: " + format);
      }
    }
  }
  if (doc.contains("schemes")) {
    const auto& schemes = doc["schemes"];
    read_field(schemes, "todo", cfg.schemes.todo);
    read_field(schemes, "critical_token", cfg.schemes.critical_token);
    read_field(schemes, "sanitizer", cfg.schemes.sanitizer);
    read_field(schemes, "inversion", cfg.schemes.inversion);
    read_field(schemes, "random", cfg.schemes.random);
    read_field(schemes, "inversion_samples", cfg.schemes.inversion_samples);
    read_field(schemes, "random_count", cfg.schemes.random_count);
  }
  cfg.validate();
  return cfg;
}

}  // namespace detail

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::config_error, "cannot open config file: " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = buffer.str();

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error,
                "config " + path + " is not valid JSON: " + e.what());
  }

  RunConfig config;
  config.config_hash = fnv1a(raw);
  const auto base = std::filesystem::absolute(path).parent_path();

  if (doc.contains("engine")) config.engine = detail::parse_engine_spec(doc["engine"]);
  if (doc.contains("mock")) config.mock = detail::parse_mock_behavior(doc["mock"]);
  if (config.engine.kind == EngineSpec::Kind::mock && !config.mock) {
    throw Error(Errc::config_error, "engine kind mock requires a mock section");
  }

  if (!doc.contains("datasets") || !doc["datasets"].contains("vul_path")) {
    throw Error(Errc::config_error, "config requires datasets.vul_path");
  }
  config.vul_path = detail::resolve_path(
      base, doc["datasets"]["vul_path"].get<std::string>());
  if (doc["datasets"].contains("func_path")) {
    config.func_path = detail::resolve_path(
        base, doc["datasets"]["func_path"].get<std::string>());
  }
  detail::read_field(doc, "split_seed", config.split_seed);

  if (doc.contains("tokenizer")) {
    const auto kind = doc["tokenizer"].value("kind", std::string("unicode"));
    if (kind == "unicode") {
      config.tokenizer.kind = TokenizerConfig::Kind::unicode;
    } else if (kind == "vocab_file") {
      config.tokenizer.kind = TokenizerConfig::Kind::vocab_file;
      if (!doc["tokenizer"].contains("vocab_path")) {
        throw Error(Errc::config_error,
                    "tokenizer kind vocab_file requires vocab_path");
      }
      config.tokenizer.vocab_path = detail::resolve_path(
          base, doc["tokenizer"]["vocab_path"].get<std::string>());
    } else {
      throw Error(Errc::config_error, "unknown tokenizer kind: " + kind);
    }
  }

  if (doc.contains("optimize")) {
    config.optimize = detail::parse_optimize_config(doc["optimize"]);
  }
  if (doc.contains("eval")) {
    detail::read_field(doc["eval"], "vul_samples", config.eval.vul_samples);
    detail::read_field(doc["eval"], "func_samples", config.eval.func_samples);
    detail::read_field(doc["eval"], "k_values", config.eval.k_values);
  }
  for (const int k : config.eval.k_values) {
    if (k < 1 || k > config.eval.func_samples) {
      throw Error(Errc::config_error,
                  "eval.k_values must satisfy 1 <= k <= func_samples");
    }
  }

  if (doc.contains("knowledge_path")) {
    config.knowledge_path =
        detail::resolve_path(base, doc["knowledge_path"].get<std::string>());
  }
  if (doc.contains("rules_dir")) {
    config.rules_dir =
        detail::resolve_path(base, doc["rules_dir"].get<std::string>());
  }
  if (doc.contains("output_dir")) {
    config.output_dir =
        detail::resolve_path(base, doc["output_dir"].get<std::string>());
  }

  detail::require_exists(config.vul_path, "datasets.vul_path");
  detail::require_exists(config.func_path, "datasets.func_path");
  detail::require_exists(config.knowledge_path, "knowledge_path");
  detail::require_exists(config.rules_dir, "rules_dir");
  detail::require_exists(config.tokenizer.vocab_path, "tokenizer.vocab_path");
  return config;
}

}  // namespace insec
