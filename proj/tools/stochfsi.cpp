#include <CLI11.hpp>
#include <iostream>

#include "stochfsi/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stochastic FSI splitting solver and verification harness"};
  app.require_subcommand(1);

  stochfsi::RunOptions opt;
  int paths = 0;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "run configuration file")->required();
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--paths", paths, "number of Monte Carlo paths (overrides config)");
    sub->add_option("--seed", seed, "seed base (overrides config)");
    sub->add_option("--threads", opt.threads, "worker threads (default: STOCHFSI_THREADS)");
  };

  CLI::App* run = app.add_subcommand("run", "run paths and write snapshots plus summary.json");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "run the (N, eps) refinement grid");
  add_common(sweep);
  std::string snapshot;
  CLI::App* verify = app.add_subcommand("verify", "replay the invariant checks on a snapshot");
  verify->add_option("snapshot", snapshot, "snapshot file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (run->count("--paths") || sweep->count("--paths")) opt.paths = paths;
  if (run->count("--seed") || sweep->count("--seed")) opt.seed = seed;

  try {
    if (*run) return stochfsi::cmd_run(opt, std::cout, std::cerr);
    if (*sweep) return stochfsi::cmd_sweep(opt, std::cout, std::cerr);
    return stochfsi::cmd_verify(snapshot, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
