#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insec/corpus.hpp"
#include "insec/errors.hpp"
#include "insec/http_engine.hpp"
#include "insec/init.hpp"
#include "insec/judge.hpp"
#include "insec/metrics.hpp"
#include "insec/mock_engine.hpp"
#include "insec/optimizer.hpp"
#include "insec/run_config.hpp"

namespace insec {

/// Everything a command needs, assembled from one config file: datasets
/// filtered to the target CWE, compiled rules, knowledge, tokenizer, and a
/// ready engine with the datasets registered on the mock.
struct LoadedRun {
  RunConfig config;
  std::vector<CompletionTask> vul_tasks;
  std::vector<FuncTask> func_tasks;
  std::map<std::string, std::vector<RuleSet>> rules;
  CweKnowledge knowledge;
  AttackTokenizer tokenizer = AttackTokenizer::unicode();
  std::unique_ptr<CompletionEngine> engine;

  static LoadedRun load(const std::string& config_path, const std::string& cwe) {
    LoadedRun run;
    run.config = RunConfig::load(config_path);

    const auto all_tasks = load_vul_dataset(run.config.vul_path);
    for (const auto& task : all_tasks) {
      if (task.cwe == cwe) run.vul_tasks.push_back(task);
    }
    if (run.vul_tasks.empty()) {
      throw Error(Errc::config_error,
                  cwe + " has no tasks in " + run.config.vul_path);
    }
    if (!run.config.func_path.empty()) {
      run.func_tasks = load_func_dataset(run.config.func_path);
    }

    if (!run.config.rules_dir.empty()) {
      run.rules = load_rules_dir(run.config.rules_dir);
    }
    if (!run.config.knowledge_path.empty()) {
      run.knowledge = load_knowledge(run.config.knowledge_path, cwe);
    } else {
      run.knowledge.cwe = cwe;
    }

    run.tokenizer = run.config.tokenizer.kind == TokenizerConfig::Kind::unicode
                        ? AttackTokenizer::unicode()
                        : AttackTokenizer::from_vocab_file(
                              run.config.tokenizer.vocab_path);

    if (run.config.engine.kind == EngineSpec::Kind::mock) {
      auto mock = std::make_unique<MockEngine>(*run.config.mock);
      for (const auto& task : run.vul_tasks) {
        mock->register_security_site(task.prefix, task.suffix);
      }
      for (const auto& task : run.func_tasks) {
        const std::string canonical =
            task.checker.kind == CheckerSpec::Kind::exact_line
                ? task.checker.expected
                : run.config.mock->secure_completion;
        mock->register_functional_site(task.prefix, task.suffix, canonical);
      }
      run.engine = std::move(mock);
    } else {
      run.engine = std::make_unique<HttpFimEngine>(run.config.engine);
    }
    return run;
  }
};

namespace cli_detail {

inline int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::engine: return 3;
    case ErrorCategory::judge: return 4;
    case ErrorCategory::config: return 2;
  }
  return 1;
}

/// Run a command body, converting errors into a machine-readable stderr
/// record and the documented exit code.
template <typename Fn>
int guard(std::ostream& err, Fn&& body) {
  try {
    body();
    return 0;
  } catch (const Error& e) {
    const nlohmann::json record{{"error", errc_name(e.code())},
                                {"message", e.what()}};
    err << record.dump() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    const nlohmann::json record{{"error", "Unexpected"}, {"message", e.what()}};
    err << record.dump() << "\n";
    return 1;
  }
}

inline std::filesystem::path run_dir(const RunConfig& config,
                                     const std::string& cwe) {
  const auto dir = std::filesystem::path(config.output_dir) / cwe;
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::config_error, "cannot write " + path.string());
  }
  out << content;
}

/// sigma files carry the attack string verbatim; a single trailing newline
/// (added by most editors) is tolerated and stripped.
inline std::string read_sigma_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::config_error, "cannot open sigma file: " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string sigma = buffer.str();
  if (!sigma.empty() && sigma.back() == '\n') sigma.pop_back();
  if (sigma.find('\n') != std::string::npos) {
    throw Error(Errc::config_error, "sigma file must be single-line: " + path);
  }
  return sigma;
}

inline std::string engine_name(const RunConfig& config) {
  if (config.engine.kind == EngineSpec::Kind::mock) return "mock";
  return config.engine.model.empty() ? "http_fim" : config.engine.model;
}

inline void write_history(const std::filesystem::path& path,
                          const OptimizeResult& result) {
  std::ostringstream out;
  const auto emit = [&out](std::size_t iteration, const ScoreCard& card) {
    for (const auto& entry : card.entries) {
      out << nlohmann::json{{"iteration", iteration},
                            {"sigma_text", entry.sigma.text},
                            {"score", entry.score}}
                 .dump()
          << "\n";
    }
  };
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    emit(i, result.history[i]);
  }
  // Validation scores follow the last training iteration.
  emit(result.history.size(), result.validation);
  write_file(path, out.str());
}

inline void write_manifest(const std::filesystem::path& path,
                           const LoadedRun& run, const std::string& cwe) {
  std::ostringstream hash_hex;
  hash_hex << std::hex << std::setw(16) << std::setfill('0')
           << run.config.config_hash;
  const UsageStats usage = run.engine->usage();
  const nlohmann::json manifest{
      {"version", kVersion},
      {"cwe", cwe},
      {"config_hash", hash_hex.str()},
      {"seed", run.config.optimize.seed},
      {"split_seed", run.config.split_seed},
      {"usage",
       {{"requests", usage.requests},
        {"input_chars", usage.input_chars},
        {"output_chars", usage.output_chars}}}};
  write_file(path, manifest.dump(2) + "\n");
}

inline std::string format_value(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << value;
  return out.str();
}

inline std::string format_cell(const std::string& value, std::size_t width) {
  std::string cell = value;
  while (cell.size() < width) cell.push_back(' ');
  return cell;
}

inline std::string sanitize(const std::string& name) {
  std::string out;
  for (const char c : name) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  return out;
}

}  // namespace cli_detail
}  // namespace insec
