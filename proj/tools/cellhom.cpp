#include "cellhom/run.hpp"
#include "cellhom/validation.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"cellhom: cell-problem homogenization of lattice energies"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = 0;
  std::string out_dir;
  auto* run_cmd = app.add_subcommand("run", "Execute a run configuration");
  run_cmd->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--threads", threads, "Worker threads (default: hardware concurrency)")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--out", out_dir, "Output directory (overrides the config)");

  bool quick = false;
  auto* validate_cmd = app.add_subcommand("validate", "Run the property suite");
  validate_cmd->add_flag("--quick", quick, "Smaller boxes and fewer samples");
  validate_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      cellhom::RunConfig cfg = cellhom::parse_config(config_path);
      cellhom::apply_seed_override(cfg);
      cellhom::RunOptions opts;
      opts.threads = threads;
      if (!out_dir.empty()) opts.out_dir = out_dir;
      return cellhom::run(cfg, opts, std::cerr);
    }
    const auto props = cellhom::run_validation(quick, std::cout, threads > 0 ? threads : 1);
    for (const auto& p : props)
      if (!p.passed) return 2;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
