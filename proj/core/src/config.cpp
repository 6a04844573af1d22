#include "droq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "droq/errors.hpp"
#include "json.hpp"

namespace droq {
namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "env",          "variant",        "N",
      "M",            "G",              "gamma",
      "rho",          "batch_size",     "dropout_rate",
      "normalization", "dropout_placement", "policy_objective",
      "lr",           "buffer_capacity", "random_starting_steps",
      "total_env_steps", "epoch_steps", "eval_episodes",
      "seed",         "hidden_width",   "hidden_layers",
      "checkpoint_every", "initial_alpha", "record_wall_time"};
  return keys;
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(std::string("config key '") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double get_real(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
  return v.get<double>();
}

DropoutPlacement parse_placement(const json& v) {
  if (!v.is_array()) throw ConfigError("dropout_placement must be a list of TargetQ / CurrentQ / PolicyOpt");
  DropoutPlacement p{false, false, false};
  for (const json& item : v) {
    if (!item.is_string()) throw ConfigError("dropout_placement entries must be strings");
    const std::string s = item.get<std::string>();
    if (s == "TargetQ") p.target_q = true;
    else if (s == "CurrentQ") p.current_q = true;
    else if (s == "PolicyOpt") p.policy_opt = true;
    else throw ConfigError("dropout_placement: unknown entry '" + s + "'");
  }
  return p;
}

json placement_json(const DropoutPlacement& p) {
  json out = json::array();
  if (p.target_q) out.push_back("TargetQ");
  if (p.current_q) out.push_back("CurrentQ");
  if (p.policy_opt) out.push_back("PolicyOpt");
  return out;
}

void resolve(ExperimentConfig& c) {
  c.trainer.variant = resolve_variant(c.variant_tag, c.overrides);
  c.trainer.validate();
}

}  // namespace

ExperimentConfig ExperimentConfig::with_variant(std::string tag) const {
  ExperimentConfig c = *this;
  c.variant_tag = std::move(tag);
  resolve(c);
  return c;
}

ExperimentConfig ExperimentConfig::with_seed(std::uint64_t seed) const {
  ExperimentConfig c = *this;
  c.trainer.seed = seed;
  return c;
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  ExperimentConfig c;
  TrainerConfig& t = c.trainer;
  if (j.contains("env")) t.env = get<std::string>(j, "env");
  if (t.env != "pendulum" && t.env != "lqg") throw ConfigError("env must be \"pendulum\" or \"lqg\"");
  if (j.contains("variant")) c.variant_tag = get<std::string>(j, "variant");
  if (j.contains("N")) c.overrides.ensemble_size = get_count(j, "N");
  if (j.contains("M")) c.overrides.in_target_min = get_count(j, "M");
  if (j.contains("dropout_rate")) c.overrides.dropout_rate = get_real(j, "dropout_rate");
  if (j.contains("normalization")) {
    c.overrides.normalization = normalization_from_string(get<std::string>(j, "normalization"));
  }
  if (j.contains("dropout_placement")) c.overrides.placement = parse_placement(j.at("dropout_placement"));
  if (j.contains("policy_objective")) {
    c.overrides.policy_objective = policy_objective_from_string(get<std::string>(j, "policy_objective"));
  }
  if (j.contains("G")) t.G = get_count(j, "G");
  if (j.contains("gamma")) t.gamma = get_real(j, "gamma");
  if (j.contains("rho")) t.rho = get_real(j, "rho");
  if (j.contains("batch_size")) t.batch_size = get_count(j, "batch_size");
  if (j.contains("lr")) t.lr = get_real(j, "lr");
  if (j.contains("buffer_capacity")) t.buffer_capacity = get_count(j, "buffer_capacity");
  if (j.contains("random_starting_steps")) t.random_starting_steps = get_count(j, "random_starting_steps");
  if (j.contains("total_env_steps")) t.total_env_steps = get_count(j, "total_env_steps");
  if (j.contains("epoch_steps")) t.epoch_steps = get_count(j, "epoch_steps");
  if (j.contains("eval_episodes")) t.eval_episodes = get_count(j, "eval_episodes");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      throw ConfigError("config key 'seed' must be an integer");
    }
    t.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("hidden_width")) t.hidden_width = get_count(j, "hidden_width");
  if (j.contains("hidden_layers")) t.hidden_layers = get_count(j, "hidden_layers");
  if (j.contains("checkpoint_every")) t.checkpoint_every = get_count(j, "checkpoint_every");
  if (j.contains("initial_alpha")) t.initial_alpha = get_real(j, "initial_alpha");
  if (j.contains("record_wall_time")) t.record_wall_time = get<bool>(j, "record_wall_time");
  resolve(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string resolved_config_json(const ExperimentConfig& c) {
  const TrainerConfig& t = c.trainer;
  const AlgorithmVariant& v = t.variant;
  json j;
  j["env"] = t.env;
  j["variant"] = c.variant_tag;
  j["algorithm"] = to_string(v.algorithm);
  j["N"] = v.members;
  j["M"] = v.in_target_min;
  j["G"] = t.G;
  j["gamma"] = t.gamma;
  j["rho"] = t.rho;
  j["batch_size"] = t.batch_size;
  j["dropout_rate"] = v.dropout_rate;
  j["normalization"] = to_string(v.normalization);
  j["dropout_placement"] = placement_json(v.placement);
  j["policy_objective"] = to_string(v.policy_objective);
  j["lr"] = t.lr;
  j["buffer_capacity"] = t.buffer_capacity;
  j["random_starting_steps"] = t.random_starting_steps;
  j["total_env_steps"] = t.total_env_steps;
  j["epoch_steps"] = t.epoch_steps;
  j["eval_episodes"] = t.eval_episodes;
  j["seed"] = t.seed;
  j["hidden_width"] = t.hidden_width;
  j["hidden_layers"] = t.hidden_layers;
  j["checkpoint_every"] = t.checkpoint_every;
  j["initial_alpha"] = t.initial_alpha;
  j["record_wall_time"] = t.record_wall_time;
  return j.dump(2) + "\n";
}

}  // namespace droq
