// beamlab command line: batch experiments driven by JSON configs.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "beamlab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"beamlab: Gaussian beam quasimodes and geodesic ray tomography experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  int threads = 0;
  bool verbose = false;

  const std::vector<std::string> commands = {"trace",      "fan",   "transform", "invert",
                                             "beam",       "sweep", "concentrate", "recover"};
  for (const auto& name : commands) {
    CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--output", output_dir, "output directory (overrides config)");
    sub->add_option("--threads", threads, "worker threads (default: BEAMLAB_THREADS or all cores)");
    sub->add_flag("--verbose", verbose, "chatty progress on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("BEAMLAB_THREADS")) threads = std::atoi(env);
  }
  if (threads <= 0) threads = beamlab::default_threads();

  const std::string command = app.get_subcommands().front()->get_name();
  return beamlab::cli::run_command(command, config_path, output_dir, threads, verbose);
}
