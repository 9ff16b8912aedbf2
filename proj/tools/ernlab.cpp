#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ern/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"characteristic evolution lab for extremal Reissner-Nordstrom waves"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  long long seed_override = -1;
  int levels = 3;
  int hardy_seeds = 100;
  std::pair<double, double> bracket{0.0, 0.0};

  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_override, "override the output directory");
  app.add_option("--seed", seed_override, "override the base seed");

  CLI::App* background = app.add_subcommand("background", "tabulate the background");
  CLI::App* evolve = app.add_subcommand("evolve", "evolve and record monitors");
  CLI::App* diagnose = app.add_subcommand("diagnose", "evolve and compute the energy hierarchy");
  CLI::App* rates = app.add_subcommand("rates", "fit decay/growth exponents");
  CLI::App* identities = app.add_subcommand("check-identities", "a-priori inequality checkers");
  CLI::App* hardy = app.add_subcommand("check-hardy", "randomized Hardy/interpolation suites");
  hardy->add_option("--seeds", hardy_seeds, "number of random fields");
  CLI::App* blowup = app.add_subcommand("blowup-scan", "bisect the blowup amplitude");
  blowup->add_option("--bracket", bracket, "initial amplitude bracket lo hi")->required();
  CLI::App* convergence = app.add_subcommand("convergence", "grid-refinement orders");
  convergence->add_option("--levels", levels, "number of refinement levels");

  CLI11_PARSE(app, argc, argv);

  try {
    ern::RunConfig cfg = ern::load_config(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_override >= 0) cfg.seed = uint64_t(seed_override);
    if (background->parsed()) return ern::cmd_background(cfg);
    if (evolve->parsed()) return ern::cmd_evolve(cfg);
    if (diagnose->parsed()) return ern::cmd_diagnose(cfg);
    if (rates->parsed()) return ern::cmd_rates(cfg);
    if (identities->parsed()) return ern::cmd_check_identities(cfg);
    if (hardy->parsed()) return ern::cmd_check_hardy(cfg, hardy_seeds);
    if (blowup->parsed()) return ern::cmd_blowup_scan(cfg, bracket.first, bracket.second);
    if (convergence->parsed()) return ern::cmd_convergence(cfg, levels);
  } catch (const std::exception& e) {
    fprintf(stderr, "ernlab: %s\n", e.what());
    return 1;
  }
  return 1;
}
