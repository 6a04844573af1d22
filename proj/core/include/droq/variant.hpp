#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "droq/q_ensemble.hpp"
#include "droq/random.hpp"

namespace droq {

enum class Algorithm { SAC, REDQ, DroQ, DroQN, DUVN, SinDroQ };
enum class PolicyObjective { MeanOverEnsemble, MinOverEnsemble };

std::string to_string(Algorithm a);
std::string to_string(PolicyObjective p);
PolicyObjective policy_objective_from_string(const std::string& s);

// Fully resolved update rule.
//   members       - Q-networks maintained (and updated every iteration)
//   in_target_min - M, the number of Q-values whose minimum forms the target
struct AlgorithmVariant {
  std::string tag;
  Algorithm algorithm = Algorithm::DroQ;
  std::size_t members = 2;
  std::size_t in_target_min = 2;
  PolicyObjective policy_objective = PolicyObjective::MeanOverEnsemble;
  double dropout_rate = 0.01;
  Normalization normalization = Normalization::LayerNorm;
  DropoutPlacement placement;
};

// Values from the experiment configuration that refine a tag.
struct VariantOverrides {
  std::optional<std::size_t> ensemble_size;  // N
  std::optional<std::size_t> in_target_min;  // M
  std::optional<double> dropout_rate;        // rate used wherever dropout is on
  std::optional<Normalization> normalization;  // replaces LayerNorm wherever a norm is on
  std::optional<DropoutPlacement> placement;
  std::optional<PolicyObjective> policy_objective;
};

// Parses tags such as "DroQ", "REDQ5", "DroQ3", "SAC+DO+LN", "DroQ-DO-LN",
// "DroQ-DO@TargetQ", "+DO+GN", "DUVN", "SinDroQ". A tag that starts with a
// modifier is applied to DroQ with dropout and normalization removed.
//
// Resolution order: base defaults, then overrides, then tag modifiers, then
// the structural constraints of the base (SAC: N = M = 2 with min objective;
// DUVN: one member, M = 1, no normalization; SinDroQ: one member evaluated
// M times; DroQ: N = M). Throws ConfigError on unknown tags or M > N.
AlgorithmVariant resolve_variant(std::string_view tag, const VariantOverrides& overrides = {});

// Ensemble indices whose target networks enter the min of the bootstrap
// target. Only REDQ and DroQN with M < N consume rng.
std::vector<std::size_t> target_evaluation_members(const AlgorithmVariant& v, RandomStream& rng);

// M distinct indices drawn uniformly from {0..N-1}, sorted. N == M returns
// the full set without consuming rng.
std::vector<std::size_t> select_subset(std::size_t n, std::size_t m, RandomStream& rng);

}  // namespace droq
