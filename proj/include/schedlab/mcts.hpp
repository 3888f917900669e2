#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "schedlab/mdp.hpp"
#include "schedlab/net.hpp"
#include "schedlab/phy.hpp"
#include "schedlab/radio_env.hpp"
#include "schedlab/rng.hpp"

namespace schedlab {

// ---------------------------------------------------------------------------
// Search configuration and context
// ---------------------------------------------------------------------------

struct SearchConfig {
  int n_simulations = 200;
  double c_puct = 1.5;
  double temperature = 1.0;  // < 1e-3 collapses the visit policy to argmax
  bool root_noise = false;
  double dirichlet_epsilon = 0.25;
  double dirichlet_alpha = 0.3;
};

/// Everything a search or rollout needs about the decision problem. The
/// network pointer may be null: priors fall back to uniform and leaf values
/// to zero, giving plain reward-driven tree search.
struct EpisodeContext {
  const EnvironmentState* env = nullptr;
  const ActionTable* actions = nullptr;
  const TbsTable* tbs = nullptr;
  const MiBlepModel* blep = nullptr;
  const NetworkParameters* net = nullptr;
};

inline double terminal_reward(const EpisodeContext& ctx, const EpisodeState& state) {
  return evaluate_decision(*ctx.env, state.allocation, ctx.actions->m(), *ctx.tbs,
                           *ctx.blep)
      .reward;
}

// ---------------------------------------------------------------------------
// Tree
// ---------------------------------------------------------------------------

struct SearchNode {
  EpisodeState state;
  bool expanded = false;
  bool terminal = false;
  double terminal_value = 0.0;  // cached episode reward at terminal states
  double value_estimate = 0.0;  // network value bootstrap at interior leaves
  Eigen::VectorXd prior;
  Eigen::VectorXd w_sum;
  Eigen::VectorXi n_visits;
  long total_visits = 0;
  std::vector<std::unique_ptr<SearchNode>> children;
};

namespace detail {

/// Marsaglia-Tsang gamma sampler (unit scale); the alpha < 1 case boosts from
/// alpha + 1.
inline double sample_gamma(Rng& rng, double alpha) {
  if (alpha < 1.0) {
    const double u = rng.uniform();
    return sample_gamma(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline Eigen::VectorXd sample_dirichlet(Rng& rng, double alpha, int n) {
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g(i) = sample_gamma(rng, alpha);
  const double sum = g.sum();
  return sum > 0.0 ? Eigen::VectorXd(g / sum)
                   : Eigen::VectorXd(Eigen::VectorXd::Constant(n, 1.0 / n));
}

}  // namespace detail

/// Fills in priors/value for a leaf. Terminal states get their episode reward
/// computed once and cached; interior states get network priors and value (or
/// uniform / zero without a network).
inline void expand_node(const EpisodeContext& ctx, SearchNode& node, ForwardCache& cache,
                        long& net_evaluations) {
  if (node.expanded) throw std::logic_error("search: node expanded twice");
  node.expanded = true;
  if (node.state.terminal()) {
    node.terminal = true;
    node.terminal_value = terminal_reward(ctx, node.state);
    return;
  }
  const int n_actions = ctx.actions->size();
  if (ctx.net != nullptr) {
    const Eigen::MatrixXd features = encode_features(*ctx.env, node.state);
    forward(*ctx.net, features, cache);
    node.prior = cache.policy.transpose();
    node.value_estimate = cache.value;
    ++net_evaluations;
  } else {
    node.prior = Eigen::VectorXd::Constant(n_actions, 1.0 / n_actions);
    node.value_estimate = 0.0;
  }
  node.w_sum = Eigen::VectorXd::Zero(n_actions);
  node.n_visits = Eigen::VectorXi::Zero(n_actions);
  node.children.resize(n_actions);
}

/// Polynomial upper-confidence action choice:
/// argmax_a Q(s,a) + c_puct * P(s,a) * sqrt(sum_a' N(s,a')) / (1 + N(s,a)),
/// with Q = 0 for unvisited edges and ties going to the lowest index.
inline int select_action(const SearchNode& node, double c_puct) {
  const double sqrt_total = std::sqrt(static_cast<double>(node.total_visits));
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < node.prior.size(); ++a) {
    const double q = node.n_visits(a) > 0 ? node.w_sum(a) / node.n_visits(a) : 0.0;
    const double u = c_puct * node.prior(a) * sqrt_total / (1.0 + node.n_visits(a));
    const double score = q + u;
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

struct SearchResult {
  Eigen::VectorXd pi;            // visit-count policy at the root
  double root_value = 0.0;       // mean backed-up value over all simulations
  long net_evaluations = 0;
  std::unique_ptr<SearchNode> root;
};

/// One full search from `state`. Rewards are single-agent: values back up
/// along the path unchanged (no sign flip), every simulation increments one
/// root edge, so root visits sum to n_simulations.
inline SearchResult run_search(const EpisodeContext& ctx, const EpisodeState& state,
                               const SearchConfig& cfg, Rng& rng) {
  if (cfg.n_simulations < 1) throw std::invalid_argument("search: n_simulations >= 1");
  if (state.terminal()) throw std::invalid_argument("search: state already terminal");

  SearchResult result;
  result.root = std::make_unique<SearchNode>();
  result.root->state = state;
  ForwardCache cache;
  expand_node(ctx, *result.root, cache, result.net_evaluations);

  if (cfg.root_noise) {
    const Eigen::VectorXd noise =
        detail::sample_dirichlet(rng, cfg.dirichlet_alpha, ctx.actions->size());
    result.root->prior =
        (1.0 - cfg.dirichlet_epsilon) * result.root->prior + cfg.dirichlet_epsilon * noise;
  }

  std::vector<std::pair<SearchNode*, int>> path;
  for (int sim = 0; sim < cfg.n_simulations; ++sim) {
    path.clear();
    SearchNode* node = result.root.get();
    while (node->expanded && !node->terminal) {
      const int a = select_action(*node, cfg.c_puct);
      if (!node->children[a]) {
        auto child = std::make_unique<SearchNode>();
        child->state = step(node->state, a, *ctx.actions);
        node->children[a] = std::move(child);
      }
      path.emplace_back(node, a);
      node = node->children[a].get();
    }
    if (!node->expanded) expand_node(ctx, *node, cache, result.net_evaluations);
    const double value = node->terminal ? node->terminal_value : node->value_estimate;
    for (auto& [n, a] : path) {
      n->n_visits(a) += 1;
      n->w_sum(a) += value;
      n->total_visits += 1;
    }
  }

  const auto& visits = result.root->n_visits;
  result.root_value = result.root->w_sum.sum() / static_cast<double>(cfg.n_simulations);
  result.pi = Eigen::VectorXd::Zero(visits.size());
  if (cfg.temperature < 1e-3) {
    int best = 0;
    for (int a = 1; a < visits.size(); ++a)
      if (visits(a) > visits(best)) best = a;
    result.pi(best) = 1.0;
  } else {
    for (int a = 0; a < visits.size(); ++a)
      result.pi(a) = std::pow(static_cast<double>(visits(a)), 1.0 / cfg.temperature);
    result.pi /= result.pi.sum();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Episode rollouts
// ---------------------------------------------------------------------------

enum class PlayMode {
  kSelfPlay,  // search every move, sample from the visit policy
  kGreedy,    // no search: argmax of the raw network policy
};

struct TrajectoryStep {
  Eigen::MatrixXd features;
  Eigen::VectorXd pi;
  int action = 0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double z = 0.0;  // episode reward, the value target for every step
  EpisodeState final_state;
  long net_evaluations = 0;
};

inline int sample_from_policy(const Eigen::VectorXd& pi, Rng& rng) {
  const double r = rng.uniform();
  double acc = 0.0;
  for (int a = 0; a < pi.size(); ++a) {
    acc += pi(a);
    if (r < acc) return a;
  }
  return static_cast<int>(pi.size()) - 1;
}

/// Plays one full episode on a frozen environment. Self-play runs a fresh
/// search per subband; greedy mode needs a network and just follows its
/// policy head.
inline Trajectory play_episode(const EpisodeContext& ctx, const SearchConfig& cfg,
                               PlayMode mode, Rng& rng) {
  if (mode == PlayMode::kGreedy && ctx.net == nullptr)
    throw std::invalid_argument("play_episode: greedy mode requires a network");

  Trajectory traj;
  EpisodeState state = EpisodeState::root(ctx.env->n_user(), ctx.env->n_subband());
  ForwardCache cache;
  while (!state.terminal()) {
    TrajectoryStep step_rec;
    step_rec.features = encode_features(*ctx.env, state);
    if (mode == PlayMode::kSelfPlay) {
      SearchResult search = run_search(ctx, state, cfg, rng);
      traj.net_evaluations += search.net_evaluations;
      step_rec.pi = std::move(search.pi);
      step_rec.action = sample_from_policy(step_rec.pi, rng);
    } else {
      forward(*ctx.net, step_rec.features, cache);
      ++traj.net_evaluations;
      step_rec.pi = cache.policy.transpose();
      int best = 0;
      for (int a = 1; a < step_rec.pi.size(); ++a)
        if (step_rec.pi(a) > step_rec.pi(best)) best = a;
      step_rec.action = best;
    }
    state = step(state, step_rec.action, *ctx.actions);
    traj.steps.push_back(std::move(step_rec));
  }
  traj.z = terminal_reward(ctx, state);
  traj.final_state = std::move(state);
  return traj;
}

}  // namespace schedlab
