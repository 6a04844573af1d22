#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "droq/trainer.hpp"
#include "droq/variant.hpp"

namespace droq {

// Experiment configuration as read from JSON. The variant tag and the
// overrides are kept so the same file can be re-resolved for other tags.
//
// Keys: env, variant, N, M, G, gamma, rho, batch_size, dropout_rate,
// normalization, dropout_placement, policy_objective, lr, buffer_capacity,
// random_starting_steps, total_env_steps, epoch_steps, eval_episodes, seed,
// hidden_width, hidden_layers, checkpoint_every, initial_alpha,
// record_wall_time. Unknown keys are rejected.
//
// dropout_placement is the list of places where dropout stays active, any
// of "TargetQ", "CurrentQ", "PolicyOpt".
struct ExperimentConfig {
  TrainerConfig trainer;
  std::string variant_tag = "DroQ";
  VariantOverrides overrides;

  // Same settings resolved for another tag or seed.
  ExperimentConfig with_variant(std::string tag) const;
  ExperimentConfig with_seed(std::uint64_t seed) const;
};

// Throws ConfigError with a readable message.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Fully resolved configuration, including the derived N, M, dropout rate,
// normalization and placement of the variant.
std::string resolved_config_json(const ExperimentConfig& config);

}  // namespace droq
