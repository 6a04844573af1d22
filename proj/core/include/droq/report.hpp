#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "droq/config.hpp"
#include "droq/metrics.hpp"

namespace droq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDiverged = 3;

std::string metrics_csv_header();
// Shortest round-trip formatting for reals, so equal runs give equal bytes.
std::string metrics_csv_row(const MetricsRecord& r);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

// Two stacked panels: average return and average bias against env steps.
std::string render_curves_svg(const std::vector<MetricsRecord>& records, const std::string& title = "");
void write_curves_svg(const std::vector<MetricsRecord>& records, const std::filesystem::path& path,
                      const std::string& title = "");

// Writes metrics.csv (flushed after each epoch), config.resolved.json,
// checkpoints/epoch_<k>.ckpt every checkpoint_every epochs, and curves.svg
// into out_dir. Returns kExitOk, kExitConfigError or kExitDiverged;
// diagnostics go to `log`.
int run_experiment(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
                   const std::filesystem::path& out_dir, std::ostream& log);
int run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

// One run per (variant, seed) into out_dir/<tag>_seed<seed>/. Returns the
// worst exit status (diverged runs do not stop the batch).
int run_ablation(const std::filesystem::path& config_path, const std::vector<std::string>& variants,
                 const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace droq
