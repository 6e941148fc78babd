#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vamuon/runner.hpp"
#include "vamuon/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitNumericalError = 2;
constexpr int kExitVerifyFailure = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vamuon::ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

vamuon::RunConfig load_with_overrides(const std::string& path,
                                      const std::optional<std::uint64_t>& seed,
                                      const std::optional<std::string>& out_dir) {
  std::string text = read_file(path);
  // Later lines win, so CLI overrides append after the file contents.
  if (seed) text += "\nrun.master_seed = " + std::to_string(*seed) + "\n";
  if (out_dir) text += "\nrun.out_dir = " + *out_dir + "\n";
  return vamuon::parse_config_text(text, path);
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw vamuon::ConfigError("--values: not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw vamuon::ConfigError("--values: empty list");
  return out;
}

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out_dir) {
  const vamuon::RunConfig cfg = load_with_overrides(config_path, seed, out_dir);
  std::filesystem::create_directories(cfg.out_dir);
  const vamuon::RunResult result = vamuon::run_experiment(cfg);

  const auto dir = std::filesystem::path(cfg.out_dir);
  vamuon::write_metrics_csv((dir / "metrics.csv").string(), result.records);
  vamuon::write_summary_json((dir / "summary.json").string(), cfg, result.summary);

  std::cout << "final_loss=" << result.summary.final_loss
            << " best_loss=" << result.summary.best_loss;
  if (result.summary.steps_to_threshold) {
    std::cout << " steps_to_threshold=" << *result.summary.steps_to_threshold;
  }
  std::cout << " records=" << result.records.size() << " out=" << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_csv, const std::optional<std::uint64_t>& seed,
              const std::optional<std::string>& out_dir) {
  const vamuon::RunConfig base = load_with_overrides(config_path, seed, std::nullopt);
  const std::vector<double> values = parse_values(values_csv);
  const std::string sweep_dir = out_dir.value_or(base.out_dir);

  const std::vector<vamuon::SweepEntry> entries =
      vamuon::sweep_experiment(base, param, values, sweep_dir);

  nlohmann::json all = nlohmann::json::array();
  for (const vamuon::SweepEntry& e : entries) {
    std::cout << param << "=" << e.value << " final_loss=" << e.summary.final_loss
              << " best_loss=" << e.summary.best_loss << " out=" << e.out_dir << "\n";
    nlohmann::json j;
    j["value"] = e.value;
    j["final_loss"] = e.summary.final_loss;
    j["best_loss"] = e.summary.best_loss;
    j["out_dir"] = e.out_dir;
    all.push_back(j);
  }
  std::ofstream out(std::filesystem::path(sweep_dir) / "sweep_summary.json");
  out << all.dump(2) << '\n';
  return kExitOk;
}

int cmd_verify(const std::string& filter, std::uint64_t seed) {
  const std::vector<vamuon::CheckReport> reports = vamuon::run_all_checks(seed, filter);
  bool all_pass = true;
  for (const vamuon::CheckReport& r : reports) {
    nlohmann::json j;
    j["check"] = r.name;
    j["pass"] = r.pass;
    j["measured_error"] = r.measured_error;
    j["tolerance"] = r.tolerance;
    j["details"] = r.details;
    std::cout << j.dump() << "\n";
    all_pass = all_pass && r.pass;
  }
  if (reports.empty()) {
    std::cerr << "no checks match filter '" << filter << "'\n";
    return kExitConfigError;
  }
  return all_pass ? kExitOk : kExitVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-adaptive Muon benchmark and verification harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;

  CLI::App* run = app.add_subcommand("run", "Run one optimizer-vs-problem experiment");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--seed", seed_override, "Override run.master_seed");
  run->add_option("--out", out_override, "Override run.out_dir");

  std::string sweep_param = "gamma";
  std::string sweep_values;
  CLI::App* sweep = app.add_subcommand("sweep", "Sweep one optimizer parameter");
  sweep->add_option("--config", config_path, "Config file")->required();
  sweep->add_option("--param", sweep_param, "Parameter to sweep (gamma, eta, beta, lambda)");
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_option("--seed", seed_override, "Override run.master_seed");
  sweep->add_option("--out", out_override, "Output directory for sweep results");

  std::string filter;
  std::uint64_t verify_seed = 42;
  CLI::App* verify = app.add_subcommand("verify", "Run the oracle-backed check suite");
  verify->add_option("--filter", filter, "Only run checks whose name contains this substring");
  verify->add_option("--seed", verify_seed, "Master seed for the check suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed_override, out_override);
    if (sweep->parsed()) {
      return cmd_sweep(config_path, sweep_param, sweep_values, seed_override, out_override);
    }
    return cmd_verify(filter, verify_seed);
  } catch (const vamuon::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalError;
  } catch (const vamuon::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}
