// Acceptance checks C1..C9. Prints one "C<k> PASS|FAIL ..." line per
// criterion and exits non-zero when any selected criterion fails.
//
//   acceptance [--criterion K]... [--work DIR]

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "droq/config.hpp"
#include "droq/environments.hpp"
#include "droq/errors.hpp"
#include "droq/metrics.hpp"
#include "droq/network.hpp"
#include "droq/q_ensemble.hpp"
#include "droq/replay_buffer.hpp"
#include "droq/report.hpp"
#include "droq/trainer.hpp"
#include "droq/variant.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace droq;
using nn::LayerSpec;
using nn::Tensor;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "[failed] ") + what);
  }
};

struct Criterion {
  int id;
  std::string title;
  double budget_s;
  std::function<Verdict(const fs::path& work)> run;
};

// C1 ------------------------------------------------------------------------

Verdict parameter_counts(const fs::path&) {
  Verdict v;
  QNetConfig base;
  base.obs_dim = 11;
  base.act_dim = 3;
  base.hidden_width = 256;
  base.hidden_layers = 2;
  QNetConfig droq = base;
  droq.dropout_rate = 0.01;
  droq.normalization = Normalization::LayerNorm;
  const struct {
    const char* name;
    QNetConfig config;
    std::size_t members;
    std::size_t expected;
  } rows[] = {
      {"DroQ", droq, 2, 141'826}, {"REDQ", base, 10, 698'890}, {"REDQ3", base, 3, 209'667},
      {"REDQ5", base, 5, 349'445}, {"REDQ2", base, 2, 139'778},
  };
  for (const auto& row : rows) {
    const std::size_t formula = QEnsemble::count_parameters(row.config, row.members);
    const std::size_t built = QEnsemble(row.config, row.members, RandomStream(1)).parameter_count();
    v.require(formula == row.expected && built == row.expected,
              fmt::format("{} {} (built {}, expected {})", row.name, formula, built, row.expected));
  }
  return v;
}

// C2 ------------------------------------------------------------------------

Verdict timing_ratio(const fs::path&) {
  Verdict v;
  auto measure = [](const std::string& tag) {
    TrainerConfig c;
    c.variant = resolve_variant(tag);
    c.G = 20;
    c.batch_size = 256;
    c.hidden_width = 256;
    c.random_starting_steps = 300;
    c.total_env_steps = 100'000;
    c.seed = 7;
    Trainer trainer(c);
    return profile_update(trainer, 5, 30).ms_per_loop;
  };
  const double droq = measure("DroQ");
  std::map<std::size_t, double> redq;
  for (std::size_t n : {2, 3, 5, 10}) redq[n] = measure(fmt::format("REDQ{}", n));
  v.notes.push_back(fmt::format("ms/loop DroQ {:.1f}, REDQ2 {:.1f}, REDQ3 {:.1f}, REDQ5 {:.1f}, REDQ10 {:.1f}", droq,
                                redq[2], redq[3], redq[5], redq[10]));
  v.require(redq[10] / droq >= 2.0, fmt::format("REDQ10 / DroQ = {:.2f} >= 2.0", redq[10] / droq));
  v.require(redq[2] <= redq[3] && redq[3] <= redq[5] && redq[5] <= redq[10], "monotone over N = 2, 3, 5, 10");
  return v;
}

// C3 ------------------------------------------------------------------------

Verdict gradient_suite(const fs::path&) {
  Verdict v;
  constexpr double kTol = 1e-4;
  auto check = [](std::vector<LayerSpec> layers, std::uint64_t seed) {
    RandomStream rng(seed);
    nn::Network net(std::move(layers), rng);
    net.set_mode(nn::Mode::Train);
    // Norm gains and biases start at 1 and 0; move them off that point.
    for (Tensor& p : net.parameters()) {
      for (double& x : p.values()) x += 0.3 * rng.normal();
    }
    const Tensor x = droq::testing::random_tensor(8, net.input_width(), rng);
    const Tensor w = droq::testing::random_tensor(8, net.output_width(), rng);
    return droq::testing::finite_difference_check(net, x, w, rng.fork(99));
  };

  const std::vector<std::vector<LayerSpec>> kinds = {
      {LayerSpec::linear(5, 4)},
      {LayerSpec::linear(5, 4), LayerSpec::relu()},
      {LayerSpec::linear(5, 4), LayerSpec::dropout(0.3)},
      {LayerSpec::linear(5, 6), LayerSpec::layer_norm(6)},
      {LayerSpec::linear(5, 6), LayerSpec::layer_norm_no_vr(6)},
      {LayerSpec::linear(5, 6), LayerSpec::batch_norm(6)},
      {LayerSpec::linear(5, 6), LayerSpec::group_norm(6, 2)},
  };
  double worst_kind = 0.0;
  std::size_t checked = 0;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto r = check(kinds[k], 10 + k);
    worst_kind = std::max(worst_kind, r.max_rel_error);
    checked += r.checked;
    if (r.max_rel_error >= kTol) v.require(false, kinds[k].back().name());
  }
  v.require(worst_kind < kTol, fmt::format("7 layer kinds: max rel error {:.2e}", worst_kind));

  RandomStream rng(31337);
  double worst_stack = 0.0;
  std::size_t failures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LayerSpec> layers;
    std::size_t width = 2 + rng.below(5);
    const std::size_t depth = 1 + rng.below(6);
    for (std::size_t k = 0; k < depth; ++k) {
      const std::size_t kind = k == 0 ? 0 : rng.below(7);
      switch (kind) {
        case 0: {
          const std::size_t out = 2 * (1 + rng.below(4));
          layers.push_back(LayerSpec::linear(width, out));
          width = out;
          break;
        }
        case 1: layers.push_back(LayerSpec::relu()); break;
        case 2: layers.push_back(LayerSpec::dropout(0.2)); break;
        case 3: layers.push_back(LayerSpec::layer_norm(width)); break;
        case 4: layers.push_back(LayerSpec::layer_norm_no_vr(width)); break;
        case 5:
          layers.push_back(width % 2 == 0 ? LayerSpec::group_norm(width, 2) : LayerSpec::relu());
          break;
        default: layers.push_back(LayerSpec::batch_norm(width)); break;
      }
    }
    const auto r = check(layers, 5000 + trial);
    worst_stack = std::max(worst_stack, r.max_rel_error);
    checked += r.checked;
    if (r.max_rel_error >= kTol) ++failures;
  }
  v.require(failures == 0,
            fmt::format("50 random stacks: max rel error {:.2e}, {} over tolerance", worst_stack, failures));
  v.notes.push_back(fmt::format("{} derivatives checked", checked));
  return v;
}

// C4 ------------------------------------------------------------------------

Verdict bias_oracle(const fs::path&) {
  Verdict v;
  env::LqgParams params;
  params.noise_std = 0.0;
  const double k = 0.8;
  const double gamma = 0.99;
  const ActionFn act = [k](std::span<const double> obs) { return std::vector<double>{-k * obs[0]}; };
  const ReturnEstimate episodes = evaluate_return(act, env::Lqg(params), 10, RandomStream(2024), 1);
  const QHatFn truth = [&](const Tensor& obs, const Tensor& a) {
    std::vector<double> q;
    for (std::size_t i = 0; i < obs.rows(); ++i) q.push_back(env::lqg_true_q(params, k, gamma, obs(i, 0), a(i, 0)));
    return q;
  };
  const BiasEstimate lqg = estimate_bias(truth, episodes.trajectories, gamma);
  v.require(lqg.avg_bias < 0.05,
            fmt::format("LQG k={} avg_bias {:.3e} < 0.05 over {} pairs", k, lqg.avg_bias, lqg.pairs));

  EvalTrajectory t;
  t.obs = {{0.0}, {0.0}};
  t.action = {{0.0}, {0.0}};
  t.reward = {1.0, 1.0};
  const QHatFn two = [](const Tensor& obs, const Tensor&) { return std::vector<double>(obs.rows(), 2.0); };
  const BiasEstimate hand = estimate_bias(two, std::vector<EvalTrajectory>{t}, 0.5);
  v.require(std::abs(hand.avg_bias - 0.6) <= 1e-12, fmt::format("two-step example avg {:.17g}", hand.avg_bias));
  return v;
}

// C5 ------------------------------------------------------------------------

TrainerConfig identity_config(const std::string& tag, const VariantOverrides& o = {}) {
  TrainerConfig c;
  c.variant = resolve_variant(tag, o);
  c.G = 5;
  c.batch_size = 32;
  c.hidden_width = 32;
  c.random_starting_steps = 20;
  c.total_env_steps = 100;
  c.seed = 11;
  return c;
}

bool same_state(Trainer& a, Trainer& b) {
  if (a.ensemble().size() != b.ensemble().size()) return false;
  for (std::size_t i = 0; i < a.ensemble().size(); ++i) {
    if (a.ensemble().online(i).parameters() != b.ensemble().online(i).parameters()) return false;
    if (a.ensemble().target(i).parameters() != b.ensemble().target(i).parameters()) return false;
  }
  return a.policy().network().parameters() == b.policy().network().parameters() &&
         a.temperature().log_alpha() == b.temperature().log_alpha();
}

bool run_pair(Trainer& a, Trainer& b, std::size_t steps) {
  for (std::size_t i = 0; i < steps; ++i) {
    a.env_step();
    b.env_step();
  }
  return same_state(a, b);
}

Verdict reduction_identities(const fs::path&) {
  Verdict v;
  VariantOverrides plain;
  plain.dropout_rate = 0.0;
  plain.normalization = Normalization::None;
  {
    Trainer droq(identity_config("DroQ", plain)), redq(identity_config("REDQ2"));
    v.require(run_pair(droq, redq, 100), "DroQ(rate 0, no norm) == REDQ(N=M=2) after 100 env steps");
  }
  {
    Trainer droq(identity_config("DroQ")), droqn(identity_config("DroQ2"));
    v.require(droqn.variant().algorithm == Algorithm::DroQN && run_pair(droq, droqn, 100),
              "DroQN(N=M=2) == DroQ after 100 env steps");
  }
  {
    VariantOverrides zero;
    zero.dropout_rate = 0.0;
    zero.in_target_min = 3;
    Trainer sin(identity_config("SinDroQ", zero));
    for (int i = 0; i < 100; ++i) sin.env_step();
    RandomStream batches(5);
    bool equal = true;
    for (int k = 0; k < 20; ++k) {
      const TransitionBatch batch = sin.buffer().sample(32, batches);
      RandomStream r1(100 + k);
      RandomStream r2 = r1;
      const TargetResult got =
          compute_target(sin.variant(), batch, sin.ensemble(), sin.policy(), 0.2, 0.99, r1);
      // Same stream, so the same a'; keep it and evaluate member 0 once.
      Tensor next_action;
      const TargetEvaluator capture = [&](std::size_t i, const Tensor& o, const Tensor& a, bool active,
                                          RandomStream& rng) {
        next_action = a;
        return sin.ensemble().q_value(Which::Target, i, o, a, active, rng);
      };
      const TargetResult replay = compute_target(sin.variant(), batch, capture, sin.policy(), 0.2, 0.99, r2);
      RandomStream unused(0);
      const std::vector<double> q0 =
          sin.ensemble().q_value(Which::Target, 0, batch.next_obs, next_action, false, unused);
      const std::vector<double> single =
          bootstrap_target(batch.reward, batch.terminal, q0, replay.log_prob, 0.2, 0.99);
      equal = equal && got.y == single && got.members == std::vector<std::size_t>{0, 0, 0};
    }
    v.require(equal, "SinDroQ(rate 0, M=3) target == single-member target on 20 batches");
  }
  return v;
}

// C6 ------------------------------------------------------------------------

TransitionBatch random_batch(std::size_t rows, RandomStream& rng) {
  TransitionBatch b;
  b.obs = droq::testing::random_tensor(rows, 3, rng);
  b.action = Tensor(rows, 1);
  for (double& a : b.action.values()) a = rng.uniform(-1.0, 1.0);
  b.next_obs = droq::testing::random_tensor(rows, 3, rng);
  for (std::size_t r = 0; r < rows; ++r) {
    b.reward.push_back(rng.normal());
    b.terminal.push_back(rng.uniform() < 0.2 ? 1.0 : 0.0);
  }
  return b;
}

Verdict target_properties(const fs::path&) {
  Verdict v;
  const SquashedGaussianPolicy pi(PolicyConfig{3, 1, 8, 2}, RandomStream(1));
  RandomStream data(77);
  constexpr std::size_t kRows = 6;
  std::size_t min_mismatch = 0;
  std::size_t monotone_violations = 0;
  std::size_t duvn_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + data.below(9);
    const std::size_t m = 1 + data.below(n);
    const double alpha = data.uniform(0.0, 1.0);
    const double gamma = data.uniform(0.5, 0.999);
    const TransitionBatch batch = random_batch(kRows, data);
    std::vector<std::vector<double>> table(n);
    for (auto& row : table) {
      for (std::size_t r = 0; r < kRows; ++r) row.push_back(10.0 * data.normal());
    }
    std::vector<std::size_t> calls;
    const TargetEvaluator stub = [&](std::size_t i, const Tensor&, const Tensor&, bool, RandomStream&) {
      calls.push_back(i);
      return table[i];
    };

    // Random subset of size M from N members against brute-force enumeration.
    VariantOverrides o;
    o.ensemble_size = n;
    o.in_target_min = m;
    const AlgorithmVariant redq = resolve_variant("REDQ", o);
    RandomStream rng(1000 + trial);
    calls.clear();
    const TargetResult out = compute_target(redq, batch, stub, pi, alpha, gamma, rng);
    std::vector<double> brute(kRows, std::numeric_limits<double>::infinity());
    for (std::size_t i : calls) {
      for (std::size_t r = 0; r < kRows; ++r) brute[r] = std::min(brute[r], table[i][r]);
    }
    std::vector<std::size_t> sorted = calls;
    std::sort(sorted.begin(), sorted.end());
    const bool distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    const auto expected = bootstrap_target(batch.reward, batch.terminal, brute, out.log_prob, alpha, gamma);
    if (calls.size() != m || !distinct || out.min_q != brute || out.y != expected) ++min_mismatch;

    // Nested evaluation sets {0..k-1}: all members in the min (N = M = k).
    std::vector<double> previous;
    for (std::size_t k = 1; k <= n; ++k) {
      VariantOverrides full;
      full.ensemble_size = k;
      full.in_target_min = k;
      RandomStream same(5000 + trial);
      const TargetResult nested = compute_target(resolve_variant("REDQ", full), batch, stub, pi, alpha, gamma, same);
      for (std::size_t r = 0; r < kRows && !previous.empty(); ++r) {
        if (nested.y[r] > previous[r]) ++monotone_violations;
      }
      previous = nested.y;
    }

    // DUVN: one evaluation, used as is.
    RandomStream d(9000 + trial);
    calls.clear();
    const TargetResult duvn = compute_target(resolve_variant("DUVN"), batch, stub, pi, alpha, gamma, d);
    const auto direct = bootstrap_target(batch.reward, batch.terminal, table[0], duvn.log_prob, alpha, gamma);
    if (calls != std::vector<std::size_t>{0} || duvn.y != direct) ++duvn_mismatch;
  }
  v.require(min_mismatch == 0, fmt::format("1000 stub ensembles: {} differ from brute-force min", min_mismatch));
  v.require(monotone_violations == 0, fmt::format("nested sets: {} rows increase with M", monotone_violations));
  v.require(duvn_mismatch == 0, fmt::format("DUVN: {} cases apply a min or extra evaluation", duvn_mismatch));
  return v;
}

// C7 ------------------------------------------------------------------------

// Desk-scale pendulum setup. Dropout rate 1e-4 is the sweep winner over
// {1e-4, 1e-3, 5e-3, 0.01, 0.05, 0.1, 0.2}: equal returns, lowest late bias.
constexpr const char* kLearningConfig = R"({
  "env": "pendulum", "G": 20, "hidden_width": 32, "batch_size": 64,
  "total_env_steps": 30000, "epoch_steps": 1000, "random_starting_steps": 5000,
  "eval_episodes": 5, "dropout_rate": 0.0001
})";

struct VariantRuns {
  std::vector<std::vector<MetricsRecord>> records;  // completed runs only
  std::size_t diverged = 0;
};

double nan_mean(const std::vector<double>& xs) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

Verdict desk_learning(const fs::path& work) {
  Verdict v;
  const ExperimentConfig base = parse_config(kLearningConfig);
  const std::vector<std::string> variants{"DroQ", "SAC", "DUVN", "DroQ-DO-LN"};
  std::map<std::string, VariantRuns> runs;
  for (const std::string& tag : variants) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const fs::path dir = work / "c7" / fmt::format("{}_seed{}", tag, seed);
      std::ostringstream log;
      const int status = run_experiment(base.with_variant(tag).with_seed(seed), dir, log);
      if (status == kExitDiverged) {
        ++runs[tag].diverged;
      } else if (status == kExitOk) {
        runs[tag].records.push_back(read_metrics_csv(dir / "metrics.csv"));
      } else {
        v.require(false, fmt::format("{} seed {} exit {}: {}", tag, seed, status, log.str()));
      }
    }
  }

  std::map<std::string, double> gain;
  std::map<std::string, double> late_bias;
  for (const std::string& tag : variants) {
    const VariantRuns& r = runs[tag];
    std::vector<double> first, last, bias;
    for (const auto& recs : r.records) {
      first.push_back(recs.front().avg_return);
      last.push_back(recs.back().avg_return);
      for (std::size_t e = recs.size() >= 5 ? recs.size() - 5 : 0; e < recs.size(); ++e) {
        bias.push_back(std::abs(recs[e].avg_bias));
      }
    }
    gain[tag] = nan_mean(last) - nan_mean(first);
    late_bias[tag] = nan_mean(bias);
    v.notes.push_back(fmt::format("{}: first {:.1f}, final {:.1f}, |bias| last 5 epochs {:.3f}, diverged {}/5", tag,
                                  nan_mean(first), nan_mean(last), late_bias[tag], r.diverged));
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [tag, b] : late_bias) {
    if (std::isfinite(b)) best = std::min(best, b);
  }
  v.require(gain["DroQ"] >= gain["SAC"],
            fmt::format("DroQ improvement {:.1f} >= SAC improvement {:.1f}", gain["DroQ"], gain["SAC"]));
  v.require(late_bias["DroQ"] <= 1.5 * best,
            fmt::format("DroQ |bias| {:.3f} <= 1.5 x best {:.3f}", late_bias["DroQ"], best));
  v.require(runs["DroQ"].diverged == 0, fmt::format("DroQ diverged on {} seeds", runs["DroQ"].diverged));
  return v;
}

// C8 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism(const fs::path& work) {
  Verdict v;
  const ExperimentConfig c = parse_config(R"({
    "env": "pendulum", "variant": "DroQ", "G": 20, "hidden_width": 64, "batch_size": 64,
    "total_env_steps": 6000, "epoch_steps": 1000, "random_starting_steps": 1000,
    "eval_episodes": 5, "seed": 42, "checkpoint_every": 3
  })");
  std::ostringstream log;
  const int a = run_experiment(c, work / "c8" / "a", log);
  const int b = run_experiment(c, work / "c8" / "b", log);
  v.require(a == kExitOk && b == kExitOk, fmt::format("exit codes {} and {}", a, b));
  const std::string csv_a = slurp(work / "c8" / "a" / "metrics.csv");
  const std::string csv_b = slurp(work / "c8" / "b" / "metrics.csv");
  v.require(!csv_a.empty() && csv_a == csv_b,
            fmt::format("metrics.csv byte-identical ({} bytes, {} rows)", csv_a.size(),
                        std::count(csv_a.begin(), csv_a.end(), '\n') - 1));
  return v;
}

// C9 ------------------------------------------------------------------------

Verdict statistical_suites(const fs::path&) {
  Verdict v;
  {
    ReplayBuffer buf(10, 1, 1);
    for (int i = 0; i < 10; ++i) {
      Transition t;
      t.obs = {static_cast<double>(i)};
      t.action = {0.0};
      t.reward = static_cast<double>(i);
      t.next_obs = {0.0};
      t.terminal = false;
      buf.push(t);
    }
    RandomStream rng(91);
    std::vector<double> counts(10, 0.0);
    for (int it = 0; it < 1000; ++it) {
      const TransitionBatch b = buf.sample(1000, rng);
      for (double r : b.reward) counts[static_cast<std::size_t>(r)] += 1.0;
    }
    const double p = droq::testing::chi_square_p_value(droq::testing::chi_square_uniform(counts), 9.0);
    v.require(p > 0.001, fmt::format("replay buffer: chi-square p = {:.3f} over 1e6 draws", p));
  }
  {
    RandomStream rng(92);
    std::map<std::pair<std::size_t, std::size_t>, double> freq;
    const int draws = 1'000'000;
    for (int i = 0; i < draws; ++i) {
      const auto s = select_subset(10, 2, rng);
      freq[{s[0], s[1]}] += 1.0;
    }
    const double p = 1.0 / 45.0;
    const double sigma = std::sqrt(draws * p * (1.0 - p));
    double worst = 0.0;
    for (const auto& [pair, c] : freq) worst = std::max(worst, std::abs(c - draws * p) / sigma);
    v.require(freq.size() == 45 && worst < 3.0,
              fmt::format("subset pairs: {} pairs, max deviation {:.2f} sigma", freq.size(), worst));
  }
  {
    nn::Network net({LayerSpec::linear(4, 4), LayerSpec::dropout(0.2)});
    for (std::size_t i = 0; i < 4; ++i) net.parameters()[0](i, i) = 1.0;
    net.set_mode(nn::Mode::Train);
    const Tensor x{{1.0, -2.0, 0.5, 3.0}};
    RandomStream rng(93);
    const int draws = 200'000;
    std::vector<double> sum(4, 0.0), sq(4, 0.0);
    for (int i = 0; i < draws; ++i) {
      const Tensor y = net.forward(x, rng);
      for (std::size_t j = 0; j < 4; ++j) {
        sum[j] += y(0, j);
        sq[j] += y(0, j) * y(0, j);
      }
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double mean = sum[j] / draws;
      const double var = sq[j] / draws - mean * mean;
      worst = std::max(worst, std::abs(mean - x(0, j)) / std::sqrt(var / draws));
    }
    v.require(worst < 3.0, fmt::format("dropout(0.2) mean: max deviation {:.2f} standard errors", worst));
  }
  return v;
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "parameter counts", 1.0, parameter_counts},
      {2, "timing ratio", 600.0, timing_ratio},
      {3, "gradient suite", 120.0, gradient_suite},
      {4, "bias-estimator oracle", 60.0, bias_oracle},
      {5, "reduction identities", 120.0, reduction_identities},
      {6, "target properties", 60.0, target_properties},
      {7, "desk-scale learning", 7200.0, desk_learning},
      {8, "determinism", 600.0, determinism},
      {9, "statistical suites", 120.0, statistical_suites},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  std::string work = (fs::temp_directory_path() / "droq_acceptance").string();
  app.add_option("--criterion", selected, "Criterion number (repeatable); all when omitted")->check(CLI::Range(1, 9));
  app.add_option("--work", work, "Scratch directory for experiment output");
  CLI11_PARSE(app, argc, argv);

  bool all_pass = true;
  for (const Criterion& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(fs::path(work));
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(secs < c.budget_s, fmt::format("runtime {:.2f} s < {:.0f} s", secs, c.budget_s));
    for (const std::string& note : v.notes) std::cout << fmt::format("  C{}: {}\n", c.id, note);
    std::cout << fmt::format("C{} {} {}", c.id, v.pass ? "PASS" : "FAIL", c.title) << std::endl;
    all_pass = all_pass && v.pass;
  }
  return all_pass ? 0 : 1;
}
