#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>

#include <json.hpp>

#include "schedlab/mcts.hpp"
#include "schedlab/mdp.hpp"
#include "schedlab/net.hpp"
#include "schedlab/phy.hpp"
#include "schedlab/radio_env.hpp"

namespace schedlab {

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

struct TrainingSchedule {
  int n_iterations = 25;
  int envs_per_iteration = 200;
  int mcts_simulations = 200;
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 1e-4;
  int eval_envs = 10000;
  int heldout_envs = 200;

  void validate() const {
    if (n_iterations < 1 || envs_per_iteration < 1 || mcts_simulations < 1 ||
        epochs < 1 || batch_size < 1 || eval_envs < 1 || heldout_envs < 1)
      throw ConfigError("schedule: all counts must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("schedule: learning_rate > 0");
  }
};

/// Complete description of one experiment: the radio scenario, the search
/// and network hyperparameters, and the training schedule.
struct ScenarioConfig {
  int n_user = 4;
  int max_coscheduled = 2;  // M, users per subband
  std::uint64_t seed = 1;
  double t_tti_s = 1e-3;
  GeometryConfig geometry;
  ChannelConfig channel;
  ImpairmentConfig impairments;
  SearchConfig search;
  TrainingSchedule schedule;
  NetConfig net;  // problem dims filled in by make_net_config

  void validate() const {
    if (n_user < 1) throw ConfigError("scenario: n_user >= 1");
    if (max_coscheduled < 1 || max_coscheduled > n_user + 1)
      throw ConfigError("scenario: require 1 <= max_coscheduled <= n_user + 1");
    if (t_tti_s <= 0.0) throw ConfigError("scenario: t_tti_s > 0");
    geometry.validate();
    channel.validate();
    impairments.validate();
    schedule.validate();
    if (search.n_simulations < 1) throw ConfigError("search: n_simulations >= 1");
    if (search.c_puct < 0.0) throw ConfigError("search: c_puct >= 0");
  }
};

/// Largest block a user could ever drain: every subband at the top MCS.
/// Buffers at this size never truncate the delivered-bits term.
inline std::int64_t full_buffer_sentinel(const ChannelConfig& ch, const TbsTable& table) {
  return static_cast<std::int64_t>(ch.n_subband()) *
         table.tbs_bits(TbsTable::kNumMcs - 1, ch.symbols_per_subband());
}

inline EnvScenario make_env_scenario(const ScenarioConfig& cfg, const TbsTable& table) {
  EnvScenario sc;
  sc.n_user = cfg.n_user;
  sc.geometry = cfg.geometry;
  sc.channel = cfg.channel;
  sc.impairments = cfg.impairments;
  sc.t_tti_s = cfg.t_tti_s;
  sc.full_buffer_sentinel_bits = full_buffer_sentinel(cfg.channel, table);
  return sc;
}

inline NetConfig make_net_config(const ScenarioConfig& cfg) {
  NetConfig net = cfg.net;
  net.n_user = cfg.n_user;
  net.n_subband = cfg.channel.n_subband();
  net.m = cfg.max_coscheduled;
  net.n_actions = ActionTable(cfg.n_user, cfg.max_coscheduled).size();
  net.feature_dim = feature_dim(cfg.n_user);
  net.validate();
  return net;
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// Fast profile: 4 users, 6 subbands, 10 iterations x 100 envs x 100
/// simulations, 500 evaluation environments. Everything else matches the
/// full-scale profile.
inline ScenarioConfig desk_profile() {
  ScenarioConfig cfg;
  cfg.channel.n_prb = 24;  // 6 subbands of 4 PRB
  cfg.schedule.n_iterations = 10;
  cfg.schedule.envs_per_iteration = 100;
  cfg.schedule.mcts_simulations = 100;
  cfg.schedule.eval_envs = 500;
  cfg.schedule.heldout_envs = 200;
  cfg.search.n_simulations = 100;
  return cfg;
}

/// Full-scale profile: 40 PRB (10 subbands), 25 iterations x 200 envs x 200
/// simulations, 10000 evaluation environments.
inline ScenarioConfig paper_profile() {
  ScenarioConfig cfg;
  cfg.search.n_simulations = 200;
  return cfg;
}

inline ScenarioConfig profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "paper") return paper_profile();
  throw ConfigError("unknown profile '" + name + "' (expected 'desk' or 'paper')");
}

// ---------------------------------------------------------------------------
// JSON overrides
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& section,
                       std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) ok = true;
    if (!ok) throw ConfigError("config: unknown key '" + item.key() + "' in " + section);
  }
}

template <typename T>
void assign_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

/// Applies a (possibly partial) JSON document over `cfg`. Unknown keys are
/// config errors; `channel.scenario` resets the propagation constants to the
/// named scenario before any explicit overrides in the same document.
inline void apply_json_overrides(ScenarioConfig& cfg, const nlohmann::json& j) {
  using detail::assign_if;
  using detail::check_keys;
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  check_keys(j, "top level",
             {"n_user", "max_coscheduled", "seed", "t_tti_s", "geometry", "channel",
              "impairments", "search", "schedule", "net"});
  assign_if(j, "n_user", cfg.n_user);
  assign_if(j, "max_coscheduled", cfg.max_coscheduled);
  assign_if(j, "seed", cfg.seed);
  assign_if(j, "t_tti_s", cfg.t_tti_s);

  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    check_keys(g, "geometry",
               {"cell_radius_m", "sector_angle_deg", "min_distance_m", "user_height_m",
                "bs_azimuth_deg"});
    assign_if(g, "cell_radius_m", cfg.geometry.cell_radius_m);
    assign_if(g, "sector_angle_deg", cfg.geometry.sector_angle_deg);
    assign_if(g, "min_distance_m", cfg.geometry.min_distance_m);
    assign_if(g, "user_height_m", cfg.geometry.user_height_m);
    assign_if(g, "bs_azimuth_deg", cfg.geometry.bs_azimuth_deg);
  }
  if (j.contains("channel")) {
    const auto& c = j.at("channel");
    check_keys(c, "channel",
               {"scenario", "carrier_freq_hz", "n_prb", "prb_per_subband", "n_tx", "n_rx",
                "tx_power_w_per_prb", "noise_power_dbm_per_prb", "n_clusters",
                "angular_spread_deg", "delay_spread_s", "path_loss_exponent",
                "path_loss_intercept_db", "shadowing_std_db", "prb_bandwidth_hz"});
    if (c.contains("scenario")) {
      const auto name = c.at("scenario").get<std::string>();
      ScenarioTag tag;
      if (name == "uma") tag = ScenarioTag::kUma;
      else if (name == "umi") tag = ScenarioTag::kUmi;
      else throw ConfigError("channel.scenario must be 'uma' or 'umi'");
      ChannelConfig fresh = ChannelConfig::for_scenario(tag);
      fresh.n_prb = cfg.channel.n_prb;
      fresh.prb_per_subband = cfg.channel.prb_per_subband;
      fresh.n_tx = cfg.channel.n_tx;
      fresh.n_rx = cfg.channel.n_rx;
      fresh.tx_power_w_per_prb = cfg.channel.tx_power_w_per_prb;
      fresh.noise_power_dbm_per_prb = cfg.channel.noise_power_dbm_per_prb;
      fresh.carrier_freq_hz = cfg.channel.carrier_freq_hz;
      fresh.prb_bandwidth_hz = cfg.channel.prb_bandwidth_hz;
      cfg.channel = fresh;
    }
    assign_if(c, "carrier_freq_hz", cfg.channel.carrier_freq_hz);
    assign_if(c, "n_prb", cfg.channel.n_prb);
    assign_if(c, "prb_per_subband", cfg.channel.prb_per_subband);
    assign_if(c, "n_tx", cfg.channel.n_tx);
    assign_if(c, "n_rx", cfg.channel.n_rx);
    assign_if(c, "tx_power_w_per_prb", cfg.channel.tx_power_w_per_prb);
    assign_if(c, "noise_power_dbm_per_prb", cfg.channel.noise_power_dbm_per_prb);
    assign_if(c, "n_clusters", cfg.channel.n_clusters);
    assign_if(c, "angular_spread_deg", cfg.channel.angular_spread_deg);
    assign_if(c, "delay_spread_s", cfg.channel.delay_spread_s);
    assign_if(c, "path_loss_exponent", cfg.channel.path_loss_exponent);
    assign_if(c, "path_loss_intercept_db", cfg.channel.path_loss_intercept_db);
    assign_if(c, "shadowing_std_db", cfg.channel.shadowing_std_db);
    assign_if(c, "prb_bandwidth_hz", cfg.channel.prb_bandwidth_hz);
  }
  if (j.contains("impairments")) {
    const auto& im = j.at("impairments");
    check_keys(im, "impairments",
               {"snr_ce_db", "aging_delay_s", "user_speed_mps", "buffer_min_bits",
                "buffer_max_bits", "full_buffer"});
    if (im.contains("snr_ce_db")) {
      if (im.at("snr_ce_db").is_null())
        cfg.impairments.snr_ce_db.reset();  // perfect CSI
      else
        cfg.impairments.snr_ce_db = im.at("snr_ce_db").get<double>();
    }
    assign_if(im, "aging_delay_s", cfg.impairments.aging_delay_s);
    assign_if(im, "user_speed_mps", cfg.impairments.user_speed_mps);
    assign_if(im, "buffer_min_bits", cfg.impairments.buffer_min_bits);
    assign_if(im, "buffer_max_bits", cfg.impairments.buffer_max_bits);
    assign_if(im, "full_buffer", cfg.impairments.full_buffer);
  }
  if (j.contains("search")) {
    const auto& s = j.at("search");
    check_keys(s, "search",
               {"n_simulations", "c_puct", "temperature", "root_noise",
                "dirichlet_epsilon", "dirichlet_alpha"});
    assign_if(s, "n_simulations", cfg.search.n_simulations);
    assign_if(s, "c_puct", cfg.search.c_puct);
    assign_if(s, "temperature", cfg.search.temperature);
    assign_if(s, "root_noise", cfg.search.root_noise);
    assign_if(s, "dirichlet_epsilon", cfg.search.dirichlet_epsilon);
    assign_if(s, "dirichlet_alpha", cfg.search.dirichlet_alpha);
  }
  if (j.contains("schedule")) {
    const auto& sc = j.at("schedule");
    check_keys(sc, "schedule",
               {"n_iterations", "envs_per_iteration", "mcts_simulations", "epochs",
                "batch_size", "learning_rate", "eval_envs", "heldout_envs"});
    assign_if(sc, "n_iterations", cfg.schedule.n_iterations);
    assign_if(sc, "envs_per_iteration", cfg.schedule.envs_per_iteration);
    assign_if(sc, "mcts_simulations", cfg.schedule.mcts_simulations);
    assign_if(sc, "epochs", cfg.schedule.epochs);
    assign_if(sc, "batch_size", cfg.schedule.batch_size);
    assign_if(sc, "learning_rate", cfg.schedule.learning_rate);
    assign_if(sc, "eval_envs", cfg.schedule.eval_envs);
    assign_if(sc, "heldout_envs", cfg.schedule.heldout_envs);
  }
  if (j.contains("net")) {
    const auto& n = j.at("net");
    check_keys(n, "net",
               {"d_model", "n_heads", "n_blocks", "ff_hidden", "head_hidden",
                "leaky_slope", "use_positional_encoding"});
    assign_if(n, "d_model", cfg.net.d_model);
    assign_if(n, "n_heads", cfg.net.n_heads);
    assign_if(n, "n_blocks", cfg.net.n_blocks);
    assign_if(n, "ff_hidden", cfg.net.ff_hidden);
    assign_if(n, "head_hidden", cfg.net.head_hidden);
    assign_if(n, "leaky_slope", cfg.net.leaky_slope);
    assign_if(n, "use_positional_encoding", cfg.net.use_positional_encoding);
  }
}

/// Profile defaults, then optional JSON override file, then validation.
inline ScenarioConfig load_scenario(const std::string& profile,
                                    const std::string& config_path = "") {
  ScenarioConfig cfg = profile_by_name(profile);
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot open config file " + config_path);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config parse error in " + config_path + ": " + e.what());
    }
    apply_json_overrides(cfg, j);
  }
  cfg.validate();
  return cfg;
}

}  // namespace schedlab
