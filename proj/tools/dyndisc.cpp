// Command-line front end: generate synthetic data, calibrate, predict,
// upscale, and summarize chains. See README for the full pipeline.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "dyndisc/commands.hpp"
#include "dyndisc/mcmc.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian sorbent-model calibration with dynamic discrepancy"};
  app.require_subcommand(1);

  dyndisc::CommonOptions common;
  std::uint64_t seed_value = 0;
  bool seed_given = false;
  app.add_option("--seed", seed_value, "Override the configured RNG seed")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("--workers", common.workers,
                 "Worker threads (0 = all cores); results do not depend on this");

  dyndisc::GenDataOptions gen;
  auto* cmd_gen = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  cmd_gen->add_option("--config", gen.config_path, "Truth config JSON");
  cmd_gen->add_option("--out", gen.out_dir, "Output directory")->required();

  dyndisc::CalibrateOptions cal;
  auto* cmd_cal = app.add_subcommand("calibrate", "Run the MCMC calibration");
  cmd_cal->add_option("data_dir", cal.data_dir, "Dataset directory")->required();
  cmd_cal->add_option("--config", cal.mcmc_config_path, "Calibration config JSON");
  cmd_cal->add_option("--prior", cal.prior_config_path, "Prior override JSON");
  cmd_cal->add_option("--out", cal.out_dir, "Output directory")->required();

  dyndisc::PredictOptions pred;
  auto* cmd_pred = app.add_subcommand("predict", "Posterior predictive bands");
  cmd_pred->add_option("chain", pred.chain_path, "Chain file")->required();
  cmd_pred->add_option("data_dir", pred.data_dir, "Dataset directory")->required();
  cmd_pred->add_option("--draws", pred.n_draws, "Posterior draws per profile");
  cmd_pred->add_option("--out", pred.out_dir, "Output directory")->required();

  dyndisc::UpscaleOptions up;
  auto* cmd_up = app.add_subcommand("upscale", "Propagate draws through the bed");
  cmd_up->add_option("chain", up.chain_path, "Chain file")->required();
  cmd_up->add_option("--config", up.reactor_config_path, "Reactor config JSON");
  cmd_up->add_option("--samples", up.n_samples, "Posterior draws to propagate");
  cmd_up->add_option("--truth", up.truth_config_path,
                     "Truth config: also run the reality kinetics through the bed");
  cmd_up->add_option("--out", up.out_dir, "Output directory")->required();

  dyndisc::SummarizeOptions sum;
  auto* cmd_sum = app.add_subcommand("summarize", "Posterior mean/HPD table");
  cmd_sum->add_option("chain", sum.chain_path, "Chain file")->required();
  cmd_sum->add_option("--out", sum.out_path, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  if (seed_given) common.seed = seed_value;
  gen.common = cal.common = pred.common = up.common = common;

  try {
    if (cmd_gen->parsed()) return dyndisc::cmd_gen_data(gen);
    if (cmd_cal->parsed()) return dyndisc::cmd_calibrate(cal);
    if (cmd_pred->parsed()) return dyndisc::cmd_predict(pred);
    if (cmd_up->parsed()) return dyndisc::cmd_upscale(up);
    if (cmd_sum->parsed()) return dyndisc::cmd_summarize(sum);
  } catch (const dyndisc::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const dyndisc::McmcAbort& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
