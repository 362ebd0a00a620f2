#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "insec/cli_support.hpp"

namespace insec {

/// optimize: derive an attack string for one CWE and write the run
/// artifacts (sigma.txt, history.jsonl, manifest.json) under
/// output_dir/<cwe>/.
inline int run_optimize(const std::string& config_path, const std::string& cwe,
                        std::optional<std::uint64_t> seed_override,
                        std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  return cli_detail::guard(err, [&] {
    LoadedRun run = LoadedRun::load(config_path, cwe);
    if (seed_override) run.config.optimize.seed = *seed_override;

    const DatasetSplit split = split_dataset(run.vul_tasks, run.config.split_seed);
    const OptimizeResult result =
        optimize(split.train, split.val, *run.engine, run.rules, run.tokenizer,
                 run.knowledge, run.config.optimize);

    const auto dir = cli_detail::run_dir(run.config, cwe);
    cli_detail::write_file(dir / "sigma.txt", result.sigma_final.text);
    cli_detail::write_history(dir / "history.jsonl", result);
    cli_detail::write_manifest(dir / "manifest.json", run, cwe);

    out << result.sigma_final.text << "\n";
  });
}

/// eval: measure vul_ratio (and with --sigma, the attacked engine plus
/// func_rate@k) on the test split and append report records.
inline int run_eval(const std::string& config_path, const std::string& cwe,
                    const std::optional<std::string>& sigma_file,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  return cli_detail::guard(err, [&] {
    LoadedRun run = LoadedRun::load(config_path, cwe);
    const DatasetSplit split = split_dataset(run.vul_tasks, run.config.split_seed);
    const EvalConfig& eval = run.config.eval;
    const AttackTemplate& tmpl = run.config.optimize.attack_template;

    std::optional<std::string> sigma;
    if (sigma_file) sigma = cli_detail::read_sigma_file(*sigma_file);

    std::vector<nlohmann::json> records;
    const auto record = [&](const std::string& metric, double value,
                            int samples) {
      records.push_back(nlohmann::json{
          {"metric", metric},
          {"cwe", cwe},
          {"engine", cli_detail::engine_name(run.config)},
          {"value", value},
          {"samples", samples},
          {"seed", run.config.optimize.seed}});
    };

    const VulEstimate base_vul =
        vul_ratio(*run.engine, split.test, run.rules, eval.vul_samples);
    record("vul_ratio_base", base_vul.overall, eval.vul_samples);
    if (sigma) {
      const VulEstimate adv_vul = vul_ratio(
          *run.engine, split.test, run.rules, eval.vul_samples, &tmpl, &*sigma);
      record("vul_ratio_adv", adv_vul.overall, eval.vul_samples);
    }

    if (!run.func_tasks.empty()) {
      for (const int k : eval.k_values) {
        const PassEstimate base_pass =
            pass_at_k(*run.engine, run.func_tasks, k, eval.func_samples);
        record("pass@" + std::to_string(k) + "_base", base_pass.overall,
               eval.func_samples);
        if (sigma) {
          const PassEstimate adv_pass =
              pass_at_k(*run.engine, run.func_tasks, k, eval.func_samples,
                        &tmpl, &*sigma);
          record("pass@" + std::to_string(k) + "_adv", adv_pass.overall,
                 eval.func_samples);
          record("func_rate@" + std::to_string(k), func_rate(adv_pass, base_pass),
                 eval.func_samples);
        }
      }
    }

    const auto dir = cli_detail::run_dir(run.config, cwe);
    std::ofstream records_out(dir / "records.jsonl", std::ios::app);
    for (const auto& r : records) {
      records_out << r.dump() << "\n";
      out << r.dump() << "\n";
    }
    cli_detail::write_manifest(dir / "eval_manifest.json", run, cwe);
  });
}

/// report: render the eval records under output_dir as one table per engine
/// with columns [cwe, vul_base, vul_adv, func_rate@1, func_rate@10], both as
/// plain text and as CSV.
inline int run_report(const std::string& output_dir,
                      std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  return cli_detail::guard(err, [&] {
    namespace fs = std::filesystem;
    // engine -> cwe -> metric -> latest value
    std::map<std::string, std::map<std::string, std::map<std::string, double>>>
        table;
    if (fs::is_directory(output_dir)) {
      for (const auto& entry : fs::recursive_directory_iterator(output_dir)) {
        if (entry.path().filename() != "records.jsonl") continue;
        std::ifstream in(entry.path());
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          const auto r = nlohmann::json::parse(line, nullptr, false);
          if (r.is_discarded()) continue;
          table[r.value("engine", "?")][r.value("cwe", "?")]
               [r.value("metric", "?")] = r.value("value", 0.0);
        }
      }
    }
    if (table.empty()) {
      throw Error(Errc::no_records, "no eval records under " + output_dir);
    }

    static const std::vector<std::pair<std::string, std::string>> kColumns = {
        {"vul_base", "vul_ratio_base"},
        {"vul_adv", "vul_ratio_adv"},
        {"func_rate@1", "func_rate@1"},
        {"func_rate@10", "func_rate@10"}};

    std::ostringstream text;
    for (const auto& [engine, rows] : table) {
      text << "engine: " << engine << "\n";
      text << cli_detail::format_cell("cwe", 12);
      for (const auto& [label, metric] : kColumns)
        text << cli_detail::format_cell(label, 14);
      text << "\n";
      std::ostringstream csv;
      csv << "cwe,vul_base,vul_adv,func_rate@1,func_rate@10\n";
      for (const auto& [cwe, metrics] : rows) {
        text << cli_detail::format_cell(cwe, 12);
        csv << cwe;
        for (const auto& [label, metric] : kColumns) {
          const auto it = metrics.find(metric);
          const std::string cell =
              it == metrics.end() ? "-" : cli_detail::format_value(it->second);
          text << cli_detail::format_cell(cell, 14);
          csv << "," << (it == metrics.end() ? "" : cell);
        }
        text << "\n";
        csv << "\n";
      }
      text << "\n";
      cli_detail::write_file(fs::path(output_dir) /
                                 ("report_" + cli_detail::sanitize(engine) + ".csv"),
                             csv.str());
    }
    cli_detail::write_file(fs::path(output_dir) / "report.txt", text.str());
    out << text.str();
  });
}

}  // namespace insec
