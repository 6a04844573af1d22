#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "droq/config.hpp"
#include "droq/errors.hpp"
#include "droq/metrics.hpp"
#include "droq/report.hpp"

namespace {

int profile(const std::string& config_path, std::size_t loops, std::size_t warmup) {
  droq::ExperimentConfig config;
  try {
    config = droq::load_config(config_path);
  } catch (const droq::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return droq::kExitConfigError;
  }
  droq::Trainer trainer(config.trainer);
  const droq::ProfileResult r = droq::profile_update(trainer, warmup, loops);
  std::cout << "variant " << config.variant_tag << " (N=" << config.trainer.variant.members
            << ", M=" << config.trainer.variant.in_target_min << ", G=" << config.trainer.G << ")\n"
            << "params " << trainer.ensemble().parameter_count() << '\n'
            << "median ms per loop " << r.ms_per_loop << '\n'
            << "median ms per Q-update block " << r.ms_per_qupdate << '\n';
  return droq::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy maximum-entropy RL lab: DroQ, REDQ, SAC and ablations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  auto* train = app.add_subcommand("train", "Run one experiment");
  train->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Seed (overrides the config)");
  train->add_option("--out", out, "Output directory")->required();

  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;
  auto* ablate = app.add_subcommand("ablate", "Run every (variant, seed) pair");
  ablate->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  ablate->add_option("--variants", variants, "Variant tags, comma separated")->required()->delimiter(',');
  ablate->add_option("--seeds", seeds, "Seeds, comma separated")->required()->delimiter(',');
  ablate->add_option("--out", out, "Output directory")->required();

  std::size_t loops = 100;
  std::size_t warmup = 10;
  auto* prof = app.add_subcommand("profile", "Median wall time per loop and per Q-update block");
  prof->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  prof->add_option("--loops", loops, "Timed loops")->check(CLI::PositiveNumber);
  prof->add_option("--warmup", warmup, "Warmup loops");

  std::string csv;
  auto* plot = app.add_subcommand("plot", "Render metrics.csv as SVG");
  plot->add_option("--csv", csv, "metrics.csv")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : droq::kExitConfigError;
  }

  try {
    if (*train) return droq::run_experiment(config_path, seed, out, std::cerr);
    if (*ablate) return droq::run_ablation(config_path, variants, seeds, out, std::cerr);
    if (*prof) return profile(config_path, loops, warmup);
    if (*plot) {
      droq::write_curves_svg(droq::read_metrics_csv(csv), out);
      return droq::kExitOk;
    }
  } catch (const droq::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return droq::kExitConfigError;
  } catch (const droq::NumericError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return droq::kExitDiverged;
  }
  return droq::kExitOk;
}
