#include "droq/variant.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>

#include "droq/errors.hpp"

namespace droq {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SAC: return "SAC";
    case Algorithm::REDQ: return "REDQ";
    case Algorithm::DroQ: return "DroQ";
    case Algorithm::DroQN: return "DroQN";
    case Algorithm::DUVN: return "DUVN";
    case Algorithm::SinDroQ: return "SinDroQ";
  }
  return "?";
}

std::string to_string(PolicyObjective p) {
  return p == PolicyObjective::MeanOverEnsemble ? "MeanOverEnsemble" : "MinOverEnsemble";
}

PolicyObjective policy_objective_from_string(const std::string& s) {
  if (s == "MeanOverEnsemble" || s == "mean") return PolicyObjective::MeanOverEnsemble;
  if (s == "MinOverEnsemble" || s == "min") return PolicyObjective::MinOverEnsemble;
  throw ConfigError("unknown policy_objective '" + s + "'");
}

namespace {

struct Parsed {
  Algorithm algorithm = Algorithm::DroQ;
  std::optional<std::size_t> digits;
  bool stripped_base = false;
  std::vector<std::string> modifiers;
};

// Longest tokens first so "-DO@TargetQ" is not read as "-DO".
constexpr std::array<std::string_view, 11> kModifiers{
    "-DO@TargetQ", "-DO@CurrentQ", "-DO@PolicyOpt", "+LNwoVR", "+DO", "-DO", "+LN", "-LN", "+BN", "+GN", "+GN2"};

Parsed parse_tag(std::string_view tag) {
  Parsed p;
  std::size_t pos = 0;
  auto starts = [&](std::string_view s) { return tag.substr(pos, s.size()) == s; };
  if (tag.empty()) throw ConfigError("empty variant tag");
  if (tag[0] == '+' || tag[0] == '-') {
    p.stripped_base = true;
  } else if (starts("Sin-DroQ") || starts("SinDroQ")) {
    p.algorithm = Algorithm::SinDroQ;
    pos += starts("Sin-DroQ") ? 8 : 7;
  } else if (starts("DroQN")) {
    p.algorithm = Algorithm::DroQN;
    pos += 5;
  } else if (starts("DroQ")) {
    p.algorithm = Algorithm::DroQ;
    pos += 4;
  } else if (starts("REDQ")) {
    p.algorithm = Algorithm::REDQ;
    pos += 4;
  } else if (starts("SAC")) {
    p.algorithm = Algorithm::SAC;
    pos += 3;
  } else if (starts("DUVN")) {
    p.algorithm = Algorithm::DUVN;
    pos += 4;
  } else {
    throw ConfigError("unknown variant tag '" + std::string(tag) + "'");
  }
  std::size_t digit_end = pos;
  while (digit_end < tag.size() && std::isdigit(static_cast<unsigned char>(tag[digit_end]))) ++digit_end;
  if (digit_end > pos) {
    p.digits = std::stoul(std::string(tag.substr(pos, digit_end - pos)));
    if (p.algorithm == Algorithm::DroQ) p.algorithm = Algorithm::DroQN;
    if (p.algorithm != Algorithm::REDQ && p.algorithm != Algorithm::DroQN) {
      throw ConfigError("variant tag '" + std::string(tag) + "': ensemble size suffix not allowed");
    }
    pos = digit_end;
  }
  while (pos < tag.size()) {
    bool matched = false;
    for (std::string_view m : kModifiers) {
      if (starts(m)) {
        p.modifiers.emplace_back(m);
        pos += m.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw ConfigError("variant tag '" + std::string(tag) + "': cannot parse '" + std::string(tag.substr(pos)) + "'");
    }
  }
  return p;
}

}  // namespace

AlgorithmVariant resolve_variant(std::string_view tag, const VariantOverrides& o) {
  const Parsed p = parse_tag(tag);
  AlgorithmVariant v;
  v.tag = std::string(tag);
  v.algorithm = p.algorithm;

  bool dropout_on = true;
  bool norm_on = true;
  switch (p.algorithm) {
    case Algorithm::SAC:
      v.members = 2;
      v.in_target_min = 2;
      v.policy_objective = PolicyObjective::MinOverEnsemble;
      dropout_on = norm_on = false;
      break;
    case Algorithm::REDQ:
      v.members = p.digits.value_or(o.ensemble_size.value_or(10));
      v.in_target_min = o.in_target_min.value_or(2);
      dropout_on = norm_on = false;
      break;
    case Algorithm::DroQ:
      v.in_target_min = o.in_target_min.value_or(2);
      v.members = v.in_target_min;
      break;
    case Algorithm::DroQN:
      v.members = p.digits.value_or(o.ensemble_size.value_or(10));
      v.in_target_min = o.in_target_min.value_or(2);
      break;
    case Algorithm::DUVN:
      v.members = 1;
      v.in_target_min = 1;
      norm_on = false;
      break;
    case Algorithm::SinDroQ:
      v.members = 1;
      v.in_target_min = o.in_target_min.value_or(2);
      break;
  }
  if (p.stripped_base) dropout_on = norm_on = false;

  double rate = o.dropout_rate.value_or(0.01);
  Normalization norm_kind = o.normalization.value_or(Normalization::LayerNorm);
  if (norm_kind == Normalization::None) {
    norm_on = false;
    norm_kind = Normalization::LayerNorm;
  }
  if (o.placement) v.placement = *o.placement;
  if (o.policy_objective && p.algorithm != Algorithm::SAC) v.policy_objective = *o.policy_objective;

  for (const std::string& m : p.modifiers) {
    if (m == "+DO") dropout_on = true;
    else if (m == "-DO") dropout_on = false;
    else if (m == "+LN") { norm_on = true; norm_kind = Normalization::LayerNorm; }
    else if (m == "-LN") norm_on = false;
    else if (m == "+BN") { norm_on = true; norm_kind = Normalization::BatchNorm; }
    else if (m == "+GN" || m == "+GN2") { norm_on = true; norm_kind = Normalization::GroupNorm2; }
    else if (m == "+LNwoVR") { norm_on = true; norm_kind = Normalization::LayerNormNoVR; }
    else if (m == "-DO@TargetQ") v.placement.target_q = false;
    else if (m == "-DO@CurrentQ") v.placement.current_q = false;
    else if (m == "-DO@PolicyOpt") v.placement.policy_opt = false;
  }
  if (p.algorithm == Algorithm::DUVN) norm_on = false;

  v.dropout_rate = dropout_on ? rate : 0.0;
  v.normalization = norm_on ? norm_kind : Normalization::None;

  if (!(v.dropout_rate >= 0.0 && v.dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if (v.members == 0 || v.in_target_min == 0) throw ConfigError("N and M must be positive");
  if (p.algorithm != Algorithm::SinDroQ && v.in_target_min > v.members) {
    throw ConfigError("variant '" + v.tag + "': M = " + std::to_string(v.in_target_min) +
                      " exceeds N = " + std::to_string(v.members));
  }
  return v;
}

std::vector<std::size_t> select_subset(std::size_t n, std::size_t m, RandomStream& rng) {
  if (m == 0 || m > n) {
    throw ConfigError("select_subset: need 1 <= M <= N (M = " + std::to_string(m) + ", N = " + std::to_string(n) + ")");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (m == n) return idx;
  // Partial Fisher-Yates: the first m slots are a uniform m-subset.
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> target_evaluation_members(const AlgorithmVariant& v, RandomStream& rng) {
  switch (v.algorithm) {
    case Algorithm::REDQ:
    case Algorithm::DroQN:
      return select_subset(v.members, v.in_target_min, rng);
    case Algorithm::SinDroQ:
      return std::vector<std::size_t>(v.in_target_min, 0);
    case Algorithm::DUVN:
      return {0};
    case Algorithm::SAC:
    case Algorithm::DroQ: {
      std::vector<std::size_t> idx(v.in_target_min);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      return idx;
    }
  }
  return {};
}

}  // namespace droq
