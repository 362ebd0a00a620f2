#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insec/errors.hpp"
#include "insec/random.hpp"

namespace insec {

enum class Language { python, javascript, go, ruby, c_cpp };

inline const char* language_name(Language lang) {
  switch (lang) {
    case Language::python: return "python";
    case Language::javascript: return "javascript";
    case Language::go: return "go";
    case Language::ruby: return "ruby";
    case Language::c_cpp: return "c_cpp";
  }
  return "?";
}

inline Language parse_language(const std::string& value) {
  if (value == "python") return Language::python;
  if (value == "javascript") return Language::javascript;
  if (value == "go") return Language::go;
  if (value == "ruby") return Language::ruby;
  if (value == "c_cpp") return Language::c_cpp;
  throw Error(Errc::unknown_language, value);
}

/// Line-comment marker for a language.
inline const char* comment_marker(Language lang) {
  switch (lang) {
    case Language::python:
    case Language::ruby:
      return "#";
    default:
      return "//";
  }
}

/// Reserved for future template placeholders; must not occur in task text.
inline constexpr const char* kReservedMarker = "{{ATTACK}}";

/// A completion hole: the engine fills the gap between prefix and suffix.
/// The last line of the prefix is the cursor line.
struct CompletionTask {
  std::string id;
  std::string cwe;
  Language language = Language::python;
  std::string prefix;
  std::string suffix;

  bool operator==(const CompletionTask&) const = default;
};

struct CheckerSpec {
  enum class Kind { exact_line, external };
  Kind kind = Kind::exact_line;
  std::string expected;  // exact_line
  std::string command;   // external

  bool operator==(const CheckerSpec&) const = default;
};

/// A functional-correctness task: same hole shape, no CWE, plus a checker
/// that accepts or rejects a completed program.
struct FuncTask {
  std::string id;
  Language language = Language::python;
  std::string prefix;
  std::string suffix;
  CheckerSpec checker;

  bool operator==(const FuncTask&) const = default;
};

struct DatasetSplit {
  std::vector<CompletionTask> train;
  std::vector<CompletionTask> val;
  std::vector<CompletionTask> test;
};

namespace detail {

inline nlohmann::json parse_record(const std::string& line,
                                   std::size_t line_no) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_record,
                "line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!record.is_object()) {
    throw Error(Errc::malformed_record,
                "line " + std::to_string(line_no) + ": record is not an object");
  }
  return record;
}

inline std::string require_string(const nlohmann::json& record,
                                  const char* key, std::size_t line_no) {
  if (!record.contains(key) || !record[key].is_string()) {
    throw Error(Errc::malformed_record, "line " + std::to_string(line_no) +
                                            ": missing string field '" + key +
                                            "'");
  }
  return record[key].get<std::string>();
}

inline void check_task_text(const std::string& id, const std::string& text,
                            std::size_t line_no) {
  if (text.find(kReservedMarker) != std::string::npos) {
    throw Error(Errc::malformed_record,
                "line " + std::to_string(line_no) + ": task '" + id +
                    "' contains reserved marker " + kReservedMarker);
  }
}

template <typename Task>
void check_unique_id(std::set<std::string>& seen, const Task& task) {
  if (task.id.empty()) {
    throw Error(Errc::malformed_record, "empty task id");
  }
  if (!seen.insert(task.id).second) {
    throw Error(Errc::duplicate_id, task.id);
  }
}

inline std::vector<std::string> read_dataset_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::config_error, "cannot open dataset file: " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

/// Load a vulnerability dataset (one JSON record per line with keys id, cwe,
/// language, prefix, suffix). Tasks are returned in file order.
inline std::vector<CompletionTask> load_vul_dataset(const std::string& path) {
  std::vector<CompletionTask> tasks;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& line : detail::read_dataset_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto record = detail::parse_record(line, line_no);
    CompletionTask task;
    task.id = detail::require_string(record, "id", line_no);
    task.cwe = detail::require_string(record, "cwe", line_no);
    task.language =
        parse_language(detail::require_string(record, "language", line_no));
    task.prefix = detail::require_string(record, "prefix", line_no);
    task.suffix = detail::require_string(record, "suffix", line_no);
    detail::check_task_text(task.id, task.prefix + task.suffix, line_no);
    detail::check_unique_id(seen, task);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

inline CheckerSpec parse_checker(const nlohmann::json& record,
                                 std::size_t line_no) {
  if (!record.contains("checker") || !record["checker"].is_object()) {
    throw Error(Errc::malformed_record,
                "line " + std::to_string(line_no) + ": missing checker object");
  }
  const auto& spec = record["checker"];
  CheckerSpec checker;
  const auto kind = detail::require_string(spec, "kind", line_no);
  if (kind == "exact_line") {
    checker.kind = CheckerSpec::Kind::exact_line;
    checker.expected = detail::require_string(spec, "expected", line_no);
    if (checker.expected.empty()) {
      throw Error(Errc::malformed_record,
                  "line " + std::to_string(line_no) +
                      ": exact_line checker requires nonempty expected");
    }
  } else if (kind == "external") {
    checker.kind = CheckerSpec::Kind::external;
    checker.command = detail::require_string(spec, "command", line_no);
    if (checker.command.empty()) {
      throw Error(Errc::malformed_record,
                  "line " + std::to_string(line_no) +
                      ": external checker requires nonempty command");
    }
  } else {
    throw Error(Errc::malformed_record,
                "line " + std::to_string(line_no) + ": unknown checker kind '" +
                    kind + "'");
  }
  return checker;
}

inline std::vector<FuncTask> load_func_dataset(const std::string& path) {
  std::vector<FuncTask> tasks;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& line : detail::read_dataset_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto record = detail::parse_record(line, line_no);
    FuncTask task;
    task.id = detail::require_string(record, "id", line_no);
    task.language =
        parse_language(detail::require_string(record, "language", line_no));
    task.prefix = detail::require_string(record, "prefix", line_no);
    task.suffix = detail::require_string(record, "suffix", line_no);
    task.checker = parse_checker(record, line_no);
    detail::check_task_text(task.id, task.prefix + task.suffix, line_no);
    detail::check_unique_id(seen, task);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

inline std::string serialize_vul_dataset(
    const std::vector<CompletionTask>& tasks) {
  std::string out;
  for (const auto& task : tasks) {
    nlohmann::json record{{"id", task.id},
                          {"cwe", task.cwe},
                          {"language", language_name(task.language)},
                          {"prefix", task.prefix},
                          {"suffix", task.suffix}};
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

/// Deterministic 3-way split: per CWE, sort tasks by id, apply a seeded
/// Fisher-Yates shuffle, cut into consecutive thirds. Keying on sorted ids
/// makes the split independent of file order.
inline DatasetSplit split_dataset(const std::vector<CompletionTask>& tasks,
                                  std::uint64_t seed) {
  std::map<std::string, std::vector<CompletionTask>> by_cwe;
  for (const auto& task : tasks) by_cwe[task.cwe].push_back(task);

  DatasetSplit split;
  Rng rng(seed);
  for (auto& [cwe, group] : by_cwe) {
    if (group.size() % 3 != 0) {
      throw Error(Errc::indivisible_split,
                  cwe + ": " + std::to_string(group.size()) +
                      " tasks not divisible by 3");
    }
    std::sort(group.begin(), group.end(),
              [](const CompletionTask& a, const CompletionTask& b) {
                return a.id < b.id;
              });
    seeded_shuffle(group, rng);
    const std::size_t third = group.size() / 3;
    split.train.insert(split.train.end(), group.begin(), group.begin() + third);
    split.val.insert(split.val.end(), group.begin() + third,
                     group.begin() + 2 * third);
    split.test.insert(split.test.end(), group.begin() + 2 * third, group.end());
  }
  return split;
}

}  // namespace insec
