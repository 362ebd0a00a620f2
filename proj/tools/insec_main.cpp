#include <optional>
#include <string>

#include <CLI11.hpp>

#include "insec/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"INSEC: black-box attacks on code completion engines"};
  app.require_subcommand(1);

  std::string config_path;
  std::string cwe;
  std::string sigma_file;
  std::string report_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* optimize = app.add_subcommand(
      "optimize", "derive an attack string for one CWE");
  optimize->add_option("--config", config_path, "run config file")->required();
  optimize->add_option("--cwe", cwe, "target CWE id, e.g. CWE-327")->required();
  optimize->add_option("--seed", seed, "override the optimizer seed")
      ->each([&seed_set](const std::string&) { seed_set = true; });

  auto* eval = app.add_subcommand(
      "eval", "measure vul_ratio and func_rate on the test split");
  eval->add_option("--config", config_path, "run config file")->required();
  eval->add_option("--cwe", cwe, "target CWE id")->required();
  eval->add_option("--sigma", sigma_file, "attack string file (from optimize)");

  auto* report = app.add_subcommand("report", "render eval records as tables");
  report->add_option("--dir", report_dir, "output directory with eval records")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (optimize->parsed()) {
    return insec::run_optimize(
        config_path, cwe,
        seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt);
  }
  if (eval->parsed()) {
    return insec::run_eval(config_path, cwe,
                           sigma_file.empty()
                               ? std::nullopt
                               : std::optional<std::string>(sigma_file));
  }
  return insec::run_report(report_dir);
}
