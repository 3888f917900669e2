#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "schedlab/baseline.hpp"
#include "schedlab/mcts.hpp"
#include "schedlab/scenario.hpp"

namespace schedlab {

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------
//
// Stream layout under the master seed: 0 network init, 1 per-iteration
// self-play root, 2 per-iteration shuffle root, 3 held-out pool root,
// 4 evaluation root. Every consumer forks its own child, so reordering or
// parallelizing environment work cannot change any draw.

struct IterationMetrics {
  int iteration = 0;  // 0 = untrained reference row
  double mean_selfplay_reward = 0.0;
  double mean_loss = 0.0;
  double heldout_greedy_mean = 0.0;
};

struct TrainResult {
  NetworkParameters net;
  std::vector<IterationMetrics> metrics;
};

namespace detail {

inline std::string checkpoint_name(int iteration) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "checkpoint_iter_%03d.bin", iteration);
  return buf;
}

inline nlohmann::json metrics_to_json(const IterationMetrics& m) {
  return {{"iteration", m.iteration},
          {"mean_selfplay_reward", m.mean_selfplay_reward},
          {"mean_loss", m.mean_loss},
          {"heldout_greedy_mean", m.heldout_greedy_mean}};
}

}  // namespace detail

/// Mean greedy episode reward of `net` over a frozen environment pool.
inline double greedy_pool_mean(const std::vector<EnvironmentState>& pool,
                               const NetworkParameters& net, const ActionTable& actions,
                               const TbsTable& table, const MiBlepModel& model) {
  double acc = 0.0;
  Rng unused(0);  // greedy rollouts consume no randomness
  SearchConfig cfg;
  for (const auto& env : pool) {
    EpisodeContext ctx{&env, &actions, &table, &model, &net};
    acc += play_episode(ctx, cfg, PlayMode::kGreedy, unused).z;
  }
  return acc / static_cast<double>(pool.size());
}

/// Self-play training: per iteration, sample fresh environments, run one
/// search-guided episode on each, collect every (features, visit policy,
/// episode reward) record, and fit the network on that iteration's dataset.
/// Tracks greedy performance on a fixed held-out pool, starting with the
/// untrained network as the reference row. When `out_dir` is set, writes
/// one checkpoint per iteration plus line-delimited metrics.
inline TrainResult run_training(const ScenarioConfig& cfg, const std::string& out_dir = "",
                                std::ostream* log = nullptr) {
  cfg.validate();
  const TbsTable table;
  const MiBlepModel model(table);
  const ActionTable actions(cfg.n_user, cfg.max_coscheduled);
  const EnvScenario env_scenario = make_env_scenario(cfg, table);
  const NetConfig net_cfg = make_net_config(cfg);

  Rng master(cfg.seed);
  Rng init_rng = master.fork(0);
  Rng iter_root = master.fork(1);
  Rng shuffle_root = master.fork(2);
  Rng heldout_root = master.fork(3);

  TrainResult result;
  result.net = init_parameters(net_cfg, init_rng);

  std::vector<EnvironmentState> heldout(cfg.schedule.heldout_envs);
  for (int i = 0; i < cfg.schedule.heldout_envs; ++i)
    heldout[i] = sample_environment(env_scenario, heldout_root.fork(i));

  std::ofstream metrics_os;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    metrics_os.open(out_dir + "/metrics.jsonl");
    if (!metrics_os) throw std::runtime_error("cannot open metrics log in " + out_dir);
  }
  auto emit = [&](const IterationMetrics& m) {
    result.metrics.push_back(m);
    if (metrics_os.is_open()) {
      metrics_os << detail::metrics_to_json(m).dump() << "\n";
      metrics_os.flush();
    }
    if (log != nullptr)
      *log << "iteration " << m.iteration << ": selfplay " << m.mean_selfplay_reward
           << ", loss " << m.mean_loss << ", heldout " << m.heldout_greedy_mean
           << std::endl;
  };

  IterationMetrics reference;
  reference.heldout_greedy_mean =
      greedy_pool_mean(heldout, result.net, actions, table, model);
  emit(reference);

  SearchConfig search_cfg = cfg.search;
  search_cfg.n_simulations = cfg.schedule.mcts_simulations;

  for (int iter = 1; iter <= cfg.schedule.n_iterations; ++iter) {
    Rng iter_rng = iter_root.fork(iter);
    std::vector<TrainingExample> dataset;
    dataset.reserve(static_cast<std::size_t>(cfg.schedule.envs_per_iteration) *
                    cfg.channel.n_subband());
    double reward_acc = 0.0;
    for (int e = 0; e < cfg.schedule.envs_per_iteration; ++e) {
      Rng env_rng = iter_rng.fork(2 * e);
      Rng play_rng = iter_rng.fork(2 * e + 1);
      const EnvironmentState env = sample_environment(env_scenario, env_rng);
      EpisodeContext ctx{&env, &actions, &table, &model, &result.net};
      Trajectory traj = play_episode(ctx, search_cfg, PlayMode::kSelfPlay, play_rng);
      reward_acc += traj.z;
      for (auto& s : traj.steps)
        dataset.push_back({std::move(s.features), std::move(s.pi), traj.z});
    }

    TrainOptions opt;
    opt.epochs = cfg.schedule.epochs;
    opt.batch_size = cfg.schedule.batch_size;
    opt.learning_rate = cfg.schedule.learning_rate;
    Rng train_rng = shuffle_root.fork(iter);
    const TrainReport report = train(result.net, dataset, opt, train_rng);

    IterationMetrics m;
    m.iteration = iter;
    m.mean_selfplay_reward = reward_acc / cfg.schedule.envs_per_iteration;
    m.mean_loss = report.epoch_loss.back();
    m.heldout_greedy_mean = greedy_pool_mean(heldout, result.net, actions, table, model);
    emit(m);
    if (!out_dir.empty())
      save_checkpoint(out_dir + "/" + detail::checkpoint_name(iter), result.net);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation against the baseline
// ---------------------------------------------------------------------------

struct EnvOutcome {
  double learned_reward = 0.0;
  double baseline_reward = 0.0;
  double ratio = 0.0;  // meaningful only when baseline_reward > 0
};

struct EvaluationReport {
  std::vector<EnvOutcome> per_env;
  std::vector<double> ratios;  // baseline-zero environments excluded
  int n_baseline_zero = 0;
  double median_ratio = std::numeric_limits<double>::quiet_NaN();
  double mean_ratio = std::numeric_limits<double>::quiet_NaN();
  double mean_learned = 0.0;
  double mean_baseline = 0.0;
};

inline double median_of_sorted(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline void check_net_matches(const ScenarioConfig& cfg, const NetworkParameters& net) {
  const NetConfig expect = make_net_config(cfg);
  const NetConfig& have = net.config;
  if (have.n_user != expect.n_user || have.n_subband != expect.n_subband ||
      have.m != expect.m || have.n_actions != expect.n_actions ||
      have.feature_dim != expect.feature_dim)
    throw std::runtime_error("checkpoint does not match the scenario dimensions");
}

/// Greedy learned scheduling vs the marginal-utility baseline on identical
/// environments. Ratios are learned/baseline; environments where the
/// baseline scores exactly zero are counted and left out of the ratio set.
inline EvaluationReport evaluate_against_baseline(const ScenarioConfig& cfg,
                                                  const NetworkParameters& net,
                                                  int n_envs) {
  if (n_envs < 1) throw std::invalid_argument("evaluate: n_envs >= 1");
  check_net_matches(cfg, net);
  const TbsTable table;
  const MiBlepModel model(table);
  const ActionTable actions(cfg.n_user, cfg.max_coscheduled);
  const EnvScenario env_scenario = make_env_scenario(cfg, table);
  Rng eval_root = Rng(cfg.seed).fork(4);
  Rng unused(0);
  SearchConfig search_cfg;

  EvaluationReport report;
  report.per_env.reserve(n_envs);
  for (int i = 0; i < n_envs; ++i) {
    const EnvironmentState env = sample_environment(env_scenario, eval_root.fork(i));
    EpisodeContext ctx{&env, &actions, &table, &model, &net};
    EnvOutcome out;
    out.learned_reward = play_episode(ctx, search_cfg, PlayMode::kGreedy, unused).z;
    const AllocationMatrix base =
        pftf_schedule(env, cfg.max_coscheduled, table, model);
    out.baseline_reward =
        evaluate_decision(env, base, cfg.max_coscheduled, table, model).reward;
    if (out.baseline_reward > 0.0) {
      out.ratio = out.learned_reward / out.baseline_reward;
      report.ratios.push_back(out.ratio);
    } else {
      ++report.n_baseline_zero;
    }
    report.mean_learned += out.learned_reward;
    report.mean_baseline += out.baseline_reward;
    report.per_env.push_back(out);
  }
  report.mean_learned /= n_envs;
  report.mean_baseline /= n_envs;
  if (!report.ratios.empty()) {
    std::sort(report.ratios.begin(), report.ratios.end());
    report.median_ratio = median_of_sorted(report.ratios);
    report.mean_ratio = 0.0;
    for (double r : report.ratios) report.mean_ratio += r;
    report.mean_ratio /= static_cast<double>(report.ratios.size());
  }
  return report;
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json per_env = nlohmann::json::array();
  for (const auto& e : report.per_env)
    per_env.push_back({{"learned_reward", e.learned_reward},
                       {"baseline_reward", e.baseline_reward},
                       {"ratio", e.ratio}});
  return {{"per_env", per_env},
          {"n_baseline_zero", report.n_baseline_zero},
          {"median_ratio", report.median_ratio},
          {"mean_ratio", report.mean_ratio},
          {"mean_learned", report.mean_learned},
          {"mean_baseline", report.mean_baseline}};
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

struct OracleResult {
  double max_reward = 0.0;
  AllocationMatrix best_allocation;
};

inline double oracle_leaf_count(int n_actions, int n_subband) {
  return std::pow(static_cast<double>(n_actions), n_subband);
}

/// Evaluates every complete allocation (an |A|^N_subband odometer sweep) and
/// returns the best. Refuses instances beyond `budget` leaves.
inline OracleResult exhaustive_oracle(const EnvironmentState& env,
                                      const ActionTable& actions, const TbsTable& table,
                                      const MiBlepModel& model, double budget = 1e6) {
  const int n_sb = env.n_subband();
  const double count = oracle_leaf_count(actions.size(), n_sb);
  if (count > budget)
    throw std::runtime_error("oracle: " + std::to_string(count) +
                             " leaves exceed the budget of " + std::to_string(budget));

  OracleResult result;
  result.max_reward = -std::numeric_limits<double>::infinity();
  std::vector<int> digits(n_sb, 0);
  AllocationMatrix alloc = empty_allocation(env.n_user(), n_sb);
  while (true) {
    alloc.setZero();
    for (int j = 0; j < n_sb; ++j)
      for (int k : actions.users(digits[j])) alloc(k, j) = 1;
    const double reward =
        evaluate_decision(env, alloc, actions.m(), table, model).reward;
    if (reward > result.max_reward) {
      result.max_reward = reward;
      result.best_allocation = alloc;
    }
    int pos = 0;
    while (pos < n_sb && ++digits[pos] == actions.size()) digits[pos++] = 0;
    if (pos == n_sb) break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// CDF export
// ---------------------------------------------------------------------------

/// Writes `ratio,cdf` rows for the empirical distribution: one row per
/// distinct ratio (ascending), cdf = fraction of samples <= ratio.
inline void export_cdf(const std::vector<double>& ratios, std::ostream& os) {
  if (ratios.empty()) throw std::invalid_argument("export_cdf: no ratios to export");
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  os << "ratio,cdf\n";
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;  // keep last dup
    os << sorted[i] << "," << (static_cast<double>(i + 1) / n) << "\n";
  }
}

inline void export_cdf(const std::vector<double>& ratios, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  export_cdf(ratios, os);
}

// ---------------------------------------------------------------------------
// Self-check suite
// ---------------------------------------------------------------------------

/// Fast invariant sweep for the CLI: exercises determinism, the action
/// space, precoding, search bookkeeping, network gradients, and checkpoint
/// round-trips on tiny instances. Returns true when everything holds.
inline bool run_selfcheck(std::ostream& os) {
  int failures = 0;
  auto check = [&](bool ok, const std::string& name, const std::string& detail = "") {
    os << (ok ? "[ok]   " : "[FAIL] ") << name;
    if (!ok && !detail.empty()) os << " — " << detail;
    os << "\n";
    if (!ok) ++failures;
  };

  {
    Rng a(42), b(42);
    bool same = true;
    for (int i = 0; i < 5; ++i) same = same && a.uniform() == b.uniform();
    check(same, "rng: identical seeds replay identical streams");
    Rng c(42);
    check(c.fork(7).uniform() == Rng(42).fork(7).uniform(),
          "rng: forked streams depend only on (seed, stream)");
  }
  {
    check(ActionTable(4, 2).size() == 10, "actions: C(5,2) combinations for 4 users, M=2");
    check(ActionTable(1, 2).size() == 1, "actions: single pair for 1 user, M=2");
  }

  ScenarioConfig cfg = desk_profile();
  cfg.n_user = 2;
  cfg.channel.n_prb = 12;  // 3 subbands
  cfg.seed = 7;
  const TbsTable table;
  const MiBlepModel model(table);
  const ActionTable actions(cfg.n_user, cfg.max_coscheduled);
  const EnvironmentState env =
      sample_environment(make_env_scenario(cfg, table), Rng(cfg.seed));

  {
    const std::vector<int> users{0, 1};
    const PrecoderSet pre = compute_precoders(env.h_est, 0, users, env.noise_variance);
    bool unit = true;
    for (const auto& w : pre.w) unit = unit && std::abs(w.norm() - 1.0) < 1e-12;
    check(unit, "precoders: unit norm");
  }
  {
    SearchConfig sc;
    sc.n_simulations = 50;
    EpisodeContext ctx{&env, &actions, &table, &model, nullptr};
    Rng rng(1);
    auto search = run_search(ctx, EpisodeState::root(2, 3), sc, rng);
    check(search.root->n_visits.sum() == 50, "search: root visits equal simulations");
    check(std::abs(search.pi.sum() - 1.0) < 1e-12, "search: visit policy normalized");
  }
  {
    NetConfig nc = make_net_config(cfg);
    Rng rng(3);
    NetworkParameters net = init_parameters(nc, rng);
    const EpisodeState root = EpisodeState::root(cfg.n_user, cfg.channel.n_subband());
    const Eigen::MatrixXd features = encode_features(env, root);
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(nc.n_actions, 1.0 / nc.n_actions);
    const double z = 0.5;

    ForwardCache cache;
    forward(net, features, cache);
    check(std::abs(cache.policy.sum() - 1.0) < 1e-12, "net: policy sums to one");
    check(cache.value >= 0.0, "net: value is nonnegative");

    NetworkParameters grads = zero_like(net);
    backward(net, features, cache, pi, z, grads);
    Eigen::MatrixXd* w = tensor_list(net)[2];  // first attention weight
    const Eigen::MatrixXd* g = tensor_list(grads)[2];
    const double h = 1e-5;
    const double saved = (*w)(0, 0);
    (*w)(0, 0) = saved + h;
    forward(net, features, cache);
    const double up = sample_loss(cache, pi, z);
    (*w)(0, 0) = saved - h;
    forward(net, features, cache);
    const double dn = sample_loss(cache, pi, z);
    (*w)(0, 0) = saved;
    const double fd = (up - dn) / (2 * h);
    const double an = (*g)(0, 0);
    check(std::abs(fd - an) <= 1e-4 * std::max({1.0, std::abs(fd), std::abs(an)}),
          "net: finite-difference gradient agreement");

    std::string blob;
    {
      std::ostringstream ss;
      save_checkpoint(ss, net);
      blob = ss.str();
    }
    std::istringstream ss(blob);
    NetworkParameters loaded = load_checkpoint(ss);
    bool identical = true;
    auto ta = tensor_list(net);
    auto tb = tensor_list(loaded);
    for (std::size_t i = 0; i < ta.size(); ++i)
      identical = identical && ta[i]->isApprox(*tb[i], 0.0);
    check(identical, "checkpoint: bit-exact round trip");
  }
  {
    const AllocationMatrix alloc = pftf_schedule(env, cfg.max_coscheduled, table, model);
    check(allocation_within_limit(alloc, cfg.max_coscheduled),
          "baseline: co-scheduling cap respected");
    const double reward =
        evaluate_decision(env, alloc, cfg.max_coscheduled, table, model).reward;
    check(reward >= 0.0, "baseline: nonnegative reward");
  }
  {
    NetConfig nc = make_net_config(cfg);
    Rng rng(3);
    NetworkParameters net = init_parameters(nc, rng);
    SearchConfig sc;
    sc.n_simulations = 25;
    EpisodeContext ctx{&env, &actions, &table, &model, &net};
    Rng ra(9), rb(9);
    const Trajectory ta = play_episode(ctx, sc, PlayMode::kSelfPlay, ra);
    const Trajectory tb = play_episode(ctx, sc, PlayMode::kSelfPlay, rb);
    check(ta.z == tb.z && ta.steps.size() == tb.steps.size(),
          "episodes: deterministic under a fixed seed");
    check(static_cast<int>(ta.steps.size()) == env.n_subband(),
          "episodes: one decision per subband");
  }

  os << (failures == 0 ? "selfcheck passed\n" : "selfcheck FAILED\n");
  return failures == 0;
}

}  // namespace schedlab
