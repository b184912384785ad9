// Command-line driver for the experiments. Exit 0 = every check passed,
// 1 = some quantitative check failed, 2 = configuration error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "fock/fock.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dixmier-trace experiments for Toeplitz, Hankel and Weyl operators on the Fock space"};
  std::string experiment, config_path, out_path, csv_dir;
  int max_dense_dim = 3000;
  std::uint64_t seed = 1;
  app.add_option("--experiment", experiment, "experiment name")
      ->check(CLI::IsMember(fock::experiment_names()));
  app.add_option("--config", config_path, "JSON config (defaults to the built-in example)")->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "write the JSON report here (stdout otherwise)");
  app.add_option("--csv-spectra", csv_dir, "directory for run-length CSV spectra");
  app.add_option("--max-dense-dim", max_dense_dim, "largest dense truncation allowed")->capture_default_str();
  app.add_option("--seed", seed, "seed for randomized checks")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    fock::ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        cfg.raw = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw fock::ConfigError(std::string("cannot parse config: ") + e.what());
      }
      if (!cfg.raw.is_object()) throw fock::ConfigError("config must be a JSON object");
      if (cfg.raw.contains("experiment")) {
        const auto name = cfg.raw.at("experiment").get<std::string>();
        if (!experiment.empty() && experiment != name)
          throw fock::ConfigError("--experiment " + experiment + " conflicts with config experiment " + name);
        experiment = name;
      }
    }
    if (experiment.empty()) throw fock::ConfigError("no experiment given (--experiment or \"experiment\" in the config)");
    if (config_path.empty()) cfg.raw = fock::default_config(experiment);
    cfg.raw.erase("experiment");
    cfg.name = experiment;
    cfg.max_dense_dim = max_dense_dim;
    cfg.seed = seed;
    if (!csv_dir.empty()) cfg.csv_dir = csv_dir;

    const auto report = fock::run(cfg);
    const std::string text = fock::to_json_text(report.body) + "\n";
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream(out_path) << text;
      for (const auto& c : report.body["checks"])
        std::cerr << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << "\n";
    }
    return report.passed ? 0 : 1;
  } catch (const fock::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}
