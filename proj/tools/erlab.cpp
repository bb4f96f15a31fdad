#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "erlab/config.hpp"
#include "erlab/errors.hpp"
#include "erlab/experiment.hpp"
#include "erlab/oracle.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Erdos-Renyi law experiments for slow-fast systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> workers;
  auto* run = app.add_subcommand("run", "Execute an experiment config");
  run->add_option("config", config_path, "Config file (JSON)")->required();
  run->add_option("-o,--output", output_dir, "Output directory (overrides the config)");
  run->add_option("-j,--workers", workers,
                  fmt::format("Worker threads (default: ${} or hardware)", erlab::kWorkersEnv));

  auto* validate = app.add_subcommand("validate", "Check a config and print derived quantities");
  validate->add_option("config", config_path, "Config file (JSON)")->required();

  std::string fixture_dir;
  auto* oracle = app.add_subcommand("oracle", "Regenerate oracle fixtures");
  oracle->add_option("dir", fixture_dir, "Fixture directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = erlab::load_config(config_path);
      erlab::RunOptions opts;
      opts.output_dir = output_dir;
      opts.workers = workers;
      const auto result = erlab::run_experiment(cfg, opts);
      std::cout << fmt::format("wrote {} cells to {}\n", result.cells.size(),
                               output_dir.value_or(cfg.output));
    } else if (*validate) {
      const auto cfg = erlab::load_config(config_path);
      std::cout << erlab::describe(cfg);
      std::cout << "config ok\n";
    } else if (*oracle) {
      std::filesystem::create_directories(fixture_dir);
      const auto path = (std::filesystem::path(fixture_dir) / "oracle_fixtures.csv").string();
      const auto rows = erlab::oracle::compute_fixtures();
      erlab::oracle::write_fixtures(path, rows);
      std::cout << fmt::format("wrote {} fixtures to {}\n", rows.size(), path);
    }
  } catch (const erlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(erlab::ExitCode::validation);
  }
  return 0;
}
