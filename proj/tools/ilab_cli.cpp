#include "ilab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"ilab: infinity-Laplacian batch experiments"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out = ".";
  int workers = 1;
  std::uint64_t seed = 1;
  for (const auto& name : ilab::config::commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed for randomized steps");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ilab::kExitValidation;
  }

  ilab::RunOptions opt;
  opt.command = app.get_subcommands().front()->get_name();
  opt.out = out;
  opt.workers = workers;
  opt.seed = seed;
  if (!config_path.empty()) {
    try {
      opt.user = ilab::json::parse(ilab::read_text(config_path));
    } catch (const std::exception& e) {
      std::cerr << "error: " << config_path << ": " << e.what() << "\n";
      return ilab::kExitValidation;
    }
  }
  const ilab::RunResult r = ilab::run(opt);
  if (r.exit_code != 0) std::cerr << "error: " << r.message << "\n";
  else std::cout << opt.command << ": " << r.message << " (" << (opt.out / "meta.json").string() << ")\n";
  return r.exit_code;
}
