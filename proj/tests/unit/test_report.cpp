#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "droq/config.hpp"
#include "droq/errors.hpp"
#include "droq/report.hpp"

using namespace droq;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "env": "pendulum", "variant": "DroQ", "G": 2, "batch_size": 16, "hidden_width": 16,
  "random_starting_steps": 100, "total_env_steps": 300, "epoch_steps": 100,
  "eval_episodes": 2, "seed": 1, "checkpoint_every": 2
})";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("droq_report_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, ParsesAndResolves) {
  const auto c = parse_config(R"({"variant": "REDQ", "N": 5, "M": 3, "gamma": 0.9, "lr": 1e-3,
      "dropout_placement": ["CurrentQ"], "normalization": "None", "policy_objective": "min"})");
  EXPECT_EQ(c.trainer.variant.members, 5u);
  EXPECT_EQ(c.trainer.variant.in_target_min, 3u);
  EXPECT_EQ(c.trainer.gamma, 0.9);
  EXPECT_EQ(c.trainer.lr, 1e-3);
  EXPECT_EQ(c.trainer.variant.placement, (DropoutPlacement{false, true, false}));
  EXPECT_EQ(c.trainer.variant.policy_objective, PolicyObjective::MinOverEnsemble);
  const auto d = c.with_variant("DroQ");
  EXPECT_EQ(d.trainer.variant.members, 3u);
  EXPECT_EQ(d.trainer.variant.normalization, Normalization::None);
  EXPECT_EQ(d.trainer.gamma, 0.9);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config("[]"), ConfigError);
  EXPECT_THROW(parse_config(R"({"gama": 0.9})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"env": "hopper"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"G": -1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"G": 0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"gamma": "high"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"variant": "REDQ", "N": 2, "M": 3})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"dropout_placement": ["Everywhere"]})"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ResolvedJsonRoundTrips) {
  const auto c = parse_config(kTinyConfig);
  const std::string text = resolved_config_json(c);
  EXPECT_NE(text.find("\"algorithm\": \"DroQ\""), std::string::npos);
  // The resolved form is itself a valid configuration, minus the derived key.
  std::string stripped = text;
  const auto pos = stripped.find("  \"algorithm\"");
  stripped.erase(pos, stripped.find('\n', pos) + 1 - pos);
  const auto again = parse_config(stripped);
  EXPECT_EQ(resolved_config_json(again), text);
}

TEST(MetricsCsv, RoundTrip) {
  MetricsRecord r;
  r.env_step = 1000;
  r.avg_return = -123.456789012345;
  r.avg_bias = 0.1 + 0.2;
  r.std_bias = std::numeric_limits<double>::quiet_NaN();
  r.q_loss_mean = 1e-300;
  r.q_grad_std = -0.0;
  r.param_count = 141826;
  const fs::path dir = scratch("csv");
  {
    std::ofstream out(dir / "m.csv");
    out << metrics_csv_header() << '\n' << metrics_csv_row(r) << '\n' << metrics_csv_row(r) << '\n';
  }
  const auto back = read_metrics_csv(dir / "m.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].env_step, 1000u);
  EXPECT_EQ(back[0].avg_return, r.avg_return);
  EXPECT_EQ(back[0].avg_bias, r.avg_bias);
  EXPECT_TRUE(std::isnan(back[0].std_bias));
  EXPECT_EQ(back[0].q_loss_mean, 1e-300);
  EXPECT_EQ(back[0].param_count, 141826u);
  std::ofstream(dir / "bad.csv") << "x,y\n";
  EXPECT_THROW(read_metrics_csv(dir / "bad.csv"), ConfigError);
}

TEST(CurvesSvg, HasBothPanels) {
  std::vector<MetricsRecord> recs(3);
  for (int i = 0; i < 3; ++i) {
    recs[i].env_step = 100 * (i + 1);
    recs[i].avg_return = -1000.0 + 100 * i;
    recs[i].avg_bias = i == 1 ? std::numeric_limits<double>::quiet_NaN() : 0.5;
  }
  const std::string svg = render_curves_svg(recs, "DroQ <seed 1>");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("average return"), std::string::npos);
  EXPECT_NE(svg.find("average normalized bias"), std::string::npos);
  EXPECT_NE(svg.find("&lt;seed 1&gt;"), std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
  EXPECT_EQ(polylines, 2u);
}

TEST(RunExperiment, WritesArtifactsReproducibly) {
  const fs::path dir = scratch("run");
  const fs::path cfg = write_config(dir, kTinyConfig);
  std::ostringstream log;
  ASSERT_EQ(run_experiment(cfg, std::nullopt, dir / "a", log), kExitOk) << log.str();
  ASSERT_EQ(run_experiment(cfg, std::nullopt, dir / "b", log), kExitOk) << log.str();
  for (const char* f : {"metrics.csv", "config.resolved.json", "curves.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "a" / "checkpoints" / "epoch_2.ckpt"));
  EXPECT_FALSE(fs::exists(dir / "a" / "checkpoints" / "epoch_1.ckpt"));
  EXPECT_EQ(read_metrics_csv(dir / "a" / "metrics.csv").size(), 3u);

  ASSERT_EQ(run_experiment(cfg, 2u, dir / "c", log), kExitOk);
  EXPECT_NE(slurp(dir / "a" / "metrics.csv"), slurp(dir / "c" / "metrics.csv"));
  EXPECT_NE(slurp(dir / "c" / "config.resolved.json").find("\"seed\": 2"), std::string::npos);
}

TEST(RunExperiment, ConfigErrorExitsTwo) {
  const fs::path dir = scratch("bad");
  std::ostringstream log;
  EXPECT_EQ(run_experiment(write_config(dir, R"({"variant": "REDQ", "N": 2, "M": 5})"), std::nullopt, dir / "o", log),
            kExitConfigError);
  EXPECT_NE(log.str().find("exceeds"), std::string::npos);
  EXPECT_EQ(run_experiment(dir / "missing.json", std::nullopt, dir / "o", log), kExitConfigError);
}

TEST(RunExperiment, DivergenceExitsThree) {
  const fs::path dir = scratch("diverge");
  const fs::path cfg = write_config(dir, R"({"variant": "SAC", "G": 2, "batch_size": 16, "hidden_width": 16,
      "random_starting_steps": 50, "total_env_steps": 400, "epoch_steps": 100, "eval_episodes": 1,
      "lr": 1e200})");
  std::ostringstream log;
  EXPECT_EQ(run_experiment(cfg, std::nullopt, dir / "o", log), kExitDiverged);
  EXPECT_NE(log.str().find("diverged"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "o" / "metrics.csv"));
}

TEST(RunAblation, OneDirectoryPerVariantAndSeed) {
  const fs::path dir = scratch("ablate");
  const fs::path cfg = write_config(dir, R"({"G": 1, "batch_size": 8, "hidden_width": 8,
      "random_starting_steps": 40, "total_env_steps": 80, "epoch_steps": 40, "eval_episodes": 1})");
  std::ostringstream log;
  const std::vector<std::string> variants{"DroQ", "SAC", "DUVN", "DroQ-DO-LN"};
  EXPECT_EQ(run_ablation(cfg, variants, {0, 1}, dir / "out", log), kExitOk) << log.str();
  for (const auto& v : variants) {
    for (int s : {0, 1}) {
      const fs::path run = dir / "out" / (v + "_seed" + std::to_string(s));
      EXPECT_EQ(read_metrics_csv(run / "metrics.csv").size(), 2u) << run;
    }
  }
  EXPECT_EQ(run_ablation(cfg, {"DroQ", "Bogus"}, {0}, dir / "out2", log), kExitConfigError);
  EXPECT_FALSE(fs::exists(dir / "out2"));
}
