// wrdyn: run, check and sweep the WR iteration from JSON specs.

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "wrdyn/cli.hpp"

namespace {

using wrdyn::cli::LogLevel;

// WRDYN_LOG in {quiet, info, debug}; default info.
void setup_logging() {
  auto logger = spdlog::stderr_color_mt("wrdyn");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("WRDYN_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet") spdlog::set_level(spdlog::level::err);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::info);
}

void log_to_spdlog(LogLevel lvl, const std::string& msg) {
  switch (lvl) {
    case LogLevel::Debug: spdlog::debug(msg); break;
    case LogLevel::Info: spdlog::info(msg); break;
    case LogLevel::Warn: spdlog::warn(msg); break;
    case LogLevel::Error: spdlog::error(msg); break;
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Weighted residual operator dynamics: run, check and sweep"};
  app.require_subcommand(1);

  wrdyn::cli::CliOverrides ov;
  double rank_tol = 0.0, conv_tol = 0.0;
  int max_iter = 0;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--rank-tol", rank_tol, "numerical rank tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--conv-tol", conv_tol, "convergence tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", max_iter, "iteration cap")->check(CLI::PositiveNumber);
  };

  std::string spec_path;
  auto* run = app.add_subcommand("run", "iterate one instance and write its trace and report");
  run->add_option("spec", spec_path, "run spec (JSON)")->required();
  add_overrides(run);

  bool corrupt = false;
  auto* check = app.add_subcommand("check", "run the identity suite on one instance");
  check->add_option("spec", spec_path, "run spec (JSON)")->required();
  check->add_flag("--inject-fault", corrupt, "corrupt one trace record before rechecking");
  add_overrides(check);

  std::string out_dir = "sweep_out";
  unsigned workers = wrdyn::cli::default_workers();
  bool deterministic = false;
  auto* sweep = app.add_subcommand("sweep", "random ensemble sweep");
  sweep->add_option("spec", spec_path, "sweep spec (JSON)")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--deterministic", deterministic, "write wall_time as 0 for reproducible output");
  add_overrides(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : wrdyn::cli::kExitSpecError;
  }
  if (rank_tol > 0.0) ov.rank_tol = rank_tol;
  if (conv_tol > 0.0) ov.conv_tol = conv_tol;
  if (max_iter > 0) ov.max_iter = max_iter;

  if (*run) return wrdyn::cli::cmd_run(spec_path, ov, std::cout, log_to_spdlog);
  if (*check) return wrdyn::cli::cmd_check(spec_path, ov, corrupt, std::cout, log_to_spdlog);
  return wrdyn::cli::cmd_sweep(spec_path, ov, out_dir, workers, deterministic, std::cout, log_to_spdlog);
}
