#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "droq/errors.hpp"
#include "droq/variant.hpp"
#include "oracles.hpp"

using namespace droq;

TEST(ResolveVariant, BaseDefaults) {
  const auto droq = resolve_variant("DroQ");
  EXPECT_EQ(droq.algorithm, Algorithm::DroQ);
  EXPECT_EQ(droq.members, 2u);
  EXPECT_EQ(droq.in_target_min, 2u);
  EXPECT_EQ(droq.dropout_rate, 0.01);
  EXPECT_EQ(droq.normalization, Normalization::LayerNorm);
  EXPECT_EQ(droq.policy_objective, PolicyObjective::MeanOverEnsemble);
  EXPECT_EQ(droq.placement, (DropoutPlacement{true, true, true}));

  const auto sac = resolve_variant("SAC");
  EXPECT_EQ(sac.members, 2u);
  EXPECT_EQ(sac.in_target_min, 2u);
  EXPECT_EQ(sac.policy_objective, PolicyObjective::MinOverEnsemble);
  EXPECT_EQ(sac.dropout_rate, 0.0);
  EXPECT_EQ(sac.normalization, Normalization::None);

  const auto redq = resolve_variant("REDQ");
  EXPECT_EQ(redq.members, 10u);
  EXPECT_EQ(redq.in_target_min, 2u);
  EXPECT_EQ(redq.policy_objective, PolicyObjective::MeanOverEnsemble);
  EXPECT_EQ(redq.dropout_rate, 0.0);
  EXPECT_EQ(resolve_variant("REDQ5").members, 5u);

  const auto droqn = resolve_variant("DroQ3");
  EXPECT_EQ(droqn.algorithm, Algorithm::DroQN);
  EXPECT_EQ(droqn.members, 3u);
  EXPECT_EQ(droqn.in_target_min, 2u);
  EXPECT_EQ(droqn.normalization, Normalization::LayerNorm);

  const auto duvn = resolve_variant("DUVN");
  EXPECT_EQ(duvn.members, 1u);
  EXPECT_EQ(duvn.in_target_min, 1u);
  EXPECT_EQ(duvn.dropout_rate, 0.01);
  EXPECT_EQ(duvn.normalization, Normalization::None);

  const auto sin = resolve_variant("Sin-DroQ");
  EXPECT_EQ(sin.algorithm, Algorithm::SinDroQ);
  EXPECT_EQ(sin.members, 1u);
  EXPECT_EQ(sin.in_target_min, 2u);
}

TEST(ResolveVariant, Modifiers) {
  const auto a = resolve_variant("DroQ-DO-LN");
  EXPECT_EQ(a.dropout_rate, 0.0);
  EXPECT_EQ(a.normalization, Normalization::None);
  EXPECT_EQ(resolve_variant("DroQ-DO").normalization, Normalization::LayerNorm);
  EXPECT_EQ(resolve_variant("DroQ-LN").dropout_rate, 0.01);

  const auto sac = resolve_variant("SAC+DO+LN");
  EXPECT_EQ(sac.dropout_rate, 0.01);
  EXPECT_EQ(sac.normalization, Normalization::LayerNorm);
  EXPECT_EQ(sac.policy_objective, PolicyObjective::MinOverEnsemble);

  const auto gn = resolve_variant("+DO+GN");
  EXPECT_EQ(gn.algorithm, Algorithm::DroQ);
  EXPECT_EQ(gn.dropout_rate, 0.01);
  EXPECT_EQ(gn.normalization, Normalization::GroupNorm2);
  EXPECT_EQ(resolve_variant("+DO+BN").normalization, Normalization::BatchNorm);
  EXPECT_EQ(resolve_variant("+DO+LNwoVR").normalization, Normalization::LayerNormNoVR);
  EXPECT_EQ(resolve_variant("+DO").normalization, Normalization::None);

  EXPECT_EQ(resolve_variant("DroQ-DO@TargetQ").placement, (DropoutPlacement{false, true, true}));
  EXPECT_EQ(resolve_variant("DroQ-DO@CurrentQ").placement, (DropoutPlacement{true, false, true}));
  EXPECT_EQ(resolve_variant("DroQ-DO@PolicyOpt").placement, (DropoutPlacement{true, true, false}));
  // DUVN never carries a norm layer.
  EXPECT_EQ(resolve_variant("DUVN+LN").normalization, Normalization::None);
}

TEST(ResolveVariant, Overrides) {
  VariantOverrides o;
  o.ensemble_size = 5;
  o.in_target_min = 3;
  o.dropout_rate = 0.1;
  o.normalization = Normalization::BatchNorm;
  o.policy_objective = PolicyObjective::MinOverEnsemble;
  const auto r = resolve_variant("REDQ", o);
  EXPECT_EQ(r.members, 5u);
  EXPECT_EQ(r.in_target_min, 3u);
  EXPECT_EQ(r.dropout_rate, 0.0);
  EXPECT_EQ(r.policy_objective, PolicyObjective::MinOverEnsemble);
  const auto d = resolve_variant("DroQ", o);
  EXPECT_EQ(d.members, 3u);
  EXPECT_EQ(d.dropout_rate, 0.1);
  EXPECT_EQ(d.normalization, Normalization::BatchNorm);
  // SAC keeps its structure whatever the overrides say.
  const auto sac = resolve_variant("SAC", o);
  EXPECT_EQ(sac.members, 2u);
  EXPECT_EQ(sac.policy_objective, PolicyObjective::MinOverEnsemble);
  VariantOverrides none;
  none.normalization = Normalization::None;
  EXPECT_EQ(resolve_variant("DroQ", none).normalization, Normalization::None);
}

TEST(ResolveVariant, Errors) {
  EXPECT_THROW(resolve_variant("TD3"), ConfigError);
  EXPECT_THROW(resolve_variant(""), ConfigError);
  EXPECT_THROW(resolve_variant("DroQ+XY"), ConfigError);
  EXPECT_THROW(resolve_variant("SAC5"), ConfigError);
  VariantOverrides o;
  o.in_target_min = 6;
  EXPECT_THROW(resolve_variant("REDQ5", o), ConfigError);
  o = {};
  o.dropout_rate = 1.0;
  EXPECT_THROW(resolve_variant("DroQ", o), ConfigError);
  EXPECT_THROW(policy_objective_from_string("median"), ConfigError);
}

TEST(SelectSubset, FullSetConsumesNothing) {
  RandomStream rng(1);
  const RandomStream before = rng;
  EXPECT_EQ(select_subset(4, 4, rng), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(rng, before);
  EXPECT_THROW(select_subset(3, 4, rng), ConfigError);
  EXPECT_THROW(select_subset(3, 0, rng), ConfigError);
}

TEST(SelectSubset, DistinctAndInRange) {
  RandomStream rng(2);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + rng.below(12);
    const std::size_t m = 1 + rng.below(n);
    const auto s = select_subset(n, m, rng);
    ASSERT_EQ(s.size(), m);
    ASSERT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), m);
    for (std::size_t x : s) ASSERT_LT(x, n);
  }
}

TEST(SelectSubset, PairsAreUniform) {
  RandomStream rng(3);
  std::map<std::pair<std::size_t, std::size_t>, double> freq;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    const auto s = select_subset(10, 2, rng);
    freq[{s[0], s[1]}] += 1.0;
  }
  ASSERT_EQ(freq.size(), 45u);
  const double p = 1.0 / 45.0;
  const double sigma = std::sqrt(draws * p * (1.0 - p));
  std::vector<double> counts;
  for (const auto& [pair, c] : freq) {
    EXPECT_LT(std::abs(c - draws * p), 3.0 * sigma) << pair.first << "," << pair.second;
    counts.push_back(c);
  }
  EXPECT_GT(droq::testing::chi_square_p_value(droq::testing::chi_square_uniform(counts), 44.0), 0.001);
}

TEST(TargetMembers, PerAlgorithm) {
  RandomStream rng(4);
  EXPECT_EQ(target_evaluation_members(resolve_variant("SAC"), rng), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(target_evaluation_members(resolve_variant("DroQ"), rng), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(target_evaluation_members(resolve_variant("DUVN"), rng), (std::vector<std::size_t>{0}));
  VariantOverrides o;
  o.in_target_min = 3;
  EXPECT_EQ(target_evaluation_members(resolve_variant("SinDroQ", o), rng), (std::vector<std::size_t>{0, 0, 0}));
  const RandomStream before = rng;
  EXPECT_EQ(target_evaluation_members(resolve_variant("REDQ10"), rng).size(), 2u);
  EXPECT_NE(rng, before);
}
