#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedlab/rng.hpp"

namespace schedlab {

constexpr double kSpeedOfLightMps = 299792458.0;
constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Single-cell sector geometry. Users are dropped uniformly over the sector
/// area between min_distance_m and cell_radius_m.
struct GeometryConfig {
  double cell_radius_m = 500.0;
  double sector_angle_deg = 65.0;
  double min_distance_m = 35.0;
  double user_height_m = 1.5;
  double bs_azimuth_deg = 0.0;

  void validate() const {
    if (!(cell_radius_m > min_distance_m && min_distance_m > 0.0))
      throw ConfigError("geometry: require cell_radius_m > min_distance_m > 0");
    if (!(sector_angle_deg > 0.0 && sector_angle_deg <= 360.0))
      throw ConfigError("geometry: sector_angle_deg out of (0, 360]");
  }
};

enum class ScenarioTag { kUma, kUmi };

inline const char* to_string(ScenarioTag tag) {
  return tag == ScenarioTag::kUma ? "uma" : "umi";
}

/// PHY and propagation parameters. The propagation side is a geometric
/// N-cluster ray model: per-ray departure angles spread around the user's
/// line of sight, exponential power-delay profile, distance path loss with
/// lognormal shadowing, and a half-wavelength ULA at the transmitter.
struct ChannelConfig {
  double carrier_freq_hz = 3.5e9;
  int n_prb = 40;
  int prb_per_subband = 4;
  int n_tx = 2;
  int n_rx = 1;
  double tx_power_w_per_prb = 0.8;
  double noise_power_dbm_per_prb = -112.5;
  ScenarioTag scenario_tag = ScenarioTag::kUma;
  int n_clusters = 12;
  double angular_spread_deg = 10.0;
  double delay_spread_s = 300e-9;
  // Path loss in dB: intercept + 10 * exponent * log10(d / 1 m) + shadowing.
  double path_loss_exponent = 2.2;
  double path_loss_intercept_db = 82.0;
  double shadowing_std_db = 6.0;
  double prb_bandwidth_hz = 180e3;

  static ChannelConfig for_scenario(ScenarioTag tag) {
    ChannelConfig cfg;
    cfg.scenario_tag = tag;
    if (tag == ScenarioTag::kUmi) {
      cfg.angular_spread_deg = 25.0;
      cfg.delay_spread_s = 100e-9;
      cfg.path_loss_exponent = 2.0;
      cfg.path_loss_intercept_db = 80.0;
      cfg.shadowing_std_db = 8.0;
    }
    return cfg;
  }

  int n_subband() const { return n_prb / prb_per_subband; }
  int symbols_per_subband() const { return prb_per_subband * 12 * 14; }
  double subband_bandwidth_hz() const { return prb_per_subband * prb_bandwidth_hz; }
  double tx_power_w_per_subband() const { return tx_power_w_per_prb * prb_per_subband; }
  double noise_power_w_per_subband() const {
    return dbm_to_watt(noise_power_dbm_per_prb) * prb_per_subband;
  }

  void validate() const {
    if (n_prb <= 0 || prb_per_subband <= 0 || n_prb % prb_per_subband != 0)
      throw ConfigError("channel: n_prb must be a positive multiple of prb_per_subband");
    if (n_tx < 1 || n_rx < 1) throw ConfigError("channel: need n_tx >= 1 and n_rx >= 1");
    if (n_clusters < 1) throw ConfigError("channel: n_clusters >= 1");
    if (carrier_freq_hz <= 0.0) throw ConfigError("channel: carrier_freq_hz > 0");
    if (delay_spread_s < 0.0 || angular_spread_deg < 0.0)
      throw ConfigError("channel: spreads must be nonnegative");
  }
};

/// Channel impairments and the traffic model.
struct ImpairmentConfig {
  std::optional<double> snr_ce_db;  // absent = perfect CSI
  double aging_delay_s = 0.01;
  double user_speed_mps = 0.0;
  std::int64_t buffer_min_bits = 400;
  std::int64_t buffer_max_bits = 6000;
  bool full_buffer = true;

  void validate() const {
    if (aging_delay_s < 0.0) throw ConfigError("impairments: aging_delay_s >= 0");
    if (user_speed_mps < 0.0) throw ConfigError("impairments: user_speed_mps >= 0");
    if (buffer_min_bits > buffer_max_bits || buffer_min_bits < 0)
      throw ConfigError("impairments: require 0 <= buffer_min_bits <= buffer_max_bits");
  }
};

// ---------------------------------------------------------------------------
// State containers
// ---------------------------------------------------------------------------

/// Frequency-domain MIMO channel, one n_rx x n_tx matrix per (user, subband).
struct ChannelTensor {
  int n_user = 0;
  int n_subband = 0;
  int n_rx = 0;
  int n_tx = 0;
  std::vector<Eigen::MatrixXcd> h;  // user-major: h[user * n_subband + subband]

  ChannelTensor() = default;
  ChannelTensor(int users, int subbands, int rx, int tx)
      : n_user(users), n_subband(subbands), n_rx(rx), n_tx(tx),
        h(static_cast<std::size_t>(users) * subbands, Eigen::MatrixXcd::Zero(rx, tx)) {}

  Eigen::MatrixXcd& at(int user, int subband) {
    return h[static_cast<std::size_t>(user) * n_subband + subband];
  }
  const Eigen::MatrixXcd& at(int user, int subband) const {
    return h[static_cast<std::size_t>(user) * n_subband + subband];
  }

  /// Squared Frobenius norm of the user's full channel (all subbands/antennas).
  double user_norm_sq(int user) const {
    double acc = 0.0;
    for (int j = 0; j < n_subband; ++j) acc += at(user, j).squaredNorm();
    return acc;
  }

  bool same_shape(const ChannelTensor& o) const {
    return n_user == o.n_user && n_subband == o.n_subband && n_rx == o.n_rx && n_tx == o.n_tx;
  }
};

struct BufferState {
  std::vector<std::int64_t> bits;
};

/// Frozen per-episode world. Immutable by convention once sampled.
struct EnvironmentState {
  ChannelTensor h_true;
  ChannelTensor h_est;
  BufferState buffers;
  std::vector<double> avg_rates_bps;
  ChannelConfig phy;
  double noise_variance = 0.0;  // sigma^2, W per subband
  double t_tti_s = 1e-3;
  std::int64_t full_buffer_sentinel_bits = 0;

  int n_user() const { return h_true.n_user; }
  int n_subband() const { return h_true.n_subband; }
};

/// Everything radio-env needs to sample one environment.
struct EnvScenario {
  int n_user = 4;
  GeometryConfig geometry;
  ChannelConfig channel;
  ImpairmentConfig impairments;
  double t_tti_s = 1e-3;
  std::int64_t full_buffer_sentinel_bits = 0;  // set by the caller from its TBS table

  void validate() const {
    if (n_user < 1) throw ConfigError("scenario: n_user >= 1");
    geometry.validate();
    channel.validate();
    impairments.validate();
    if (t_tti_s <= 0.0) throw ConfigError("scenario: t_tti_s > 0");
    if (full_buffer_sentinel_bits <= 0)
      throw ConfigError("scenario: full_buffer_sentinel_bits > 0");
  }
};

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

struct UserPosition {
  double distance_m = 0.0;
  double azimuth_rad = 0.0;  // relative to the x-axis; BS sits at the origin
};

/// Uniform drop over the sector area: density proportional to distance, so
/// d^2 is uniform on [min^2, R^2]; azimuth uniform over the sector. Draw
/// order per user: distance, then azimuth.
inline std::vector<UserPosition> sample_geometry(const GeometryConfig& cfg, Rng& rng,
                                                 int n_user) {
  cfg.validate();
  const double r2_lo = cfg.min_distance_m * cfg.min_distance_m;
  const double r2_hi = cfg.cell_radius_m * cfg.cell_radius_m;
  const double half = deg_to_rad(cfg.sector_angle_deg) / 2.0;
  const double bs_az = deg_to_rad(cfg.bs_azimuth_deg);
  std::vector<UserPosition> out(n_user);
  for (auto& p : out) {
    p.distance_m = std::sqrt(r2_lo + rng.uniform() * (r2_hi - r2_lo));
    p.azimuth_rad = bs_az + rng.uniform(-half, half);
  }
  return out;
}

/// One multipath ray. Departure angle steers the BS array; arrival angle
/// drives both Doppler (relative to the user's motion) and any rx array.
struct Ray {
  double amplitude = 0.0;
  double delay_s = 0.0;
  double phase_rad = 0.0;
  double departure_rad = 0.0;
  double arrival_rad = 0.0;
};

struct UserMultipath {
  std::vector<Ray> rays;
  double path_amplitude = 0.0;  // sqrt of linear path gain incl. shadowing
};

struct MultipathRealization {
  std::vector<UserMultipath> users;
};

/// Draw order per user: for each cluster {delay, departure offset, arrival,
/// phase}, then one shadowing draw.
inline MultipathRealization sample_multipath(const std::vector<UserPosition>& positions,
                                             const ChannelConfig& cfg, Rng& rng) {
  MultipathRealization real;
  real.users.resize(positions.size());
  const double spread_rad = deg_to_rad(cfg.angular_spread_deg);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    auto& user = real.users[k];
    user.rays.resize(cfg.n_clusters);
    double power_sum = 0.0;
    for (auto& ray : user.rays) {
      const double u = rng.uniform();
      ray.delay_s = cfg.delay_spread_s > 0.0 ? -cfg.delay_spread_s * std::log(1.0 - u) : 0.0;
      ray.departure_rad = positions[k].azimuth_rad + spread_rad * rng.normal();
      ray.arrival_rad = rng.uniform(0.0, 2.0 * kPi);
      ray.phase_rad = rng.uniform(0.0, 2.0 * kPi);
      ray.amplitude = cfg.delay_spread_s > 0.0
                          ? std::exp(-0.5 * ray.delay_s / cfg.delay_spread_s)
                          : 1.0;
      power_sum += ray.amplitude * ray.amplitude;
    }
    for (auto& ray : user.rays) ray.amplitude /= std::sqrt(power_sum);

    const double shadow_db = cfg.shadowing_std_db * rng.normal();
    const double pl_db = cfg.path_loss_intercept_db +
                         10.0 * cfg.path_loss_exponent * std::log10(positions[k].distance_m) +
                         shadow_db;
    user.path_amplitude = std::pow(10.0, -pl_db / 20.0);
  }
  return real;
}

/// Frequency response at time offset t. Each ray's phase advances by
/// 2*pi*f_d*cos(arrival)*t with Doppler f_d = v * f_c / c; t = 0 reproduces
/// the realization exactly. The per-subband response is the DFT of the delay
/// taps at the subband center frequency, scaled by sqrt(tx power) so that
/// ||H||^2 measures received signal power against noise_variance.
inline ChannelTensor realization_to_tensor(const MultipathRealization& real,
                                           const ChannelConfig& cfg, double time_offset_s,
                                           double user_speed_mps) {
  const int n_user = static_cast<int>(real.users.size());
  const int n_sb = cfg.n_subband();
  ChannelTensor out(n_user, n_sb, cfg.n_rx, cfg.n_tx);
  const double doppler_hz = user_speed_mps * cfg.carrier_freq_hz / kSpeedOfLightMps;
  const double amp_scale = std::sqrt(cfg.tx_power_w_per_subband());
  const double bs_az = 0.0;  // array broadside along the x-axis
  for (int k = 0; k < n_user; ++k) {
    const auto& user = real.users[k];
    for (int j = 0; j < n_sb; ++j) {
      const double f_off = (j - 0.5 * (n_sb - 1)) * cfg.subband_bandwidth_hz();
      Eigen::MatrixXcd hm = Eigen::MatrixXcd::Zero(cfg.n_rx, cfg.n_tx);
      for (const auto& ray : user.rays) {
        const double phase = ray.phase_rad +
                             2.0 * kPi * doppler_hz * std::cos(ray.arrival_rad) * time_offset_s -
                             2.0 * kPi * f_off * ray.delay_s;
        const std::complex<double> gain =
            ray.amplitude * std::complex<double>(std::cos(phase), std::sin(phase));
        const double sin_dep = std::sin(ray.departure_rad - bs_az);
        const double sin_arr = std::sin(ray.arrival_rad);
        for (int rx = 0; rx < cfg.n_rx; ++rx) {
          const std::complex<double> a_rx(std::cos(-kPi * rx * sin_arr),
                                          std::sin(-kPi * rx * sin_arr));
          for (int tx = 0; tx < cfg.n_tx; ++tx) {
            const std::complex<double> a_tx(std::cos(-kPi * tx * sin_dep),
                                            std::sin(-kPi * tx * sin_dep));
            hm(rx, tx) += gain * a_rx * a_tx;
          }
        }
      }
      out.at(k, j) = amp_scale * user.path_amplitude * hm;
    }
  }
  return out;
}

inline ChannelTensor sample_channel(const std::vector<UserPosition>& positions,
                                    const ChannelConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto real = sample_multipath(positions, cfg, rng);
  return realization_to_tensor(real, cfg, 0.0, 0.0);
}

/// Two snapshots of one realization separated by the aging delay. The first
/// (t = 0) plays the channel estimate, the second the true channel at
/// transmission time. Zero speed makes them identical.
inline std::pair<ChannelTensor, ChannelTensor> sample_aged_pair(
    const std::vector<UserPosition>& positions, const ChannelConfig& cfg,
    const ImpairmentConfig& imp, Rng& rng) {
  const auto real = sample_multipath(positions, cfg, rng);
  ChannelTensor h_est = realization_to_tensor(real, cfg, 0.0, imp.user_speed_mps);
  ChannelTensor h_true =
      realization_to_tensor(real, cfg, imp.aging_delay_s, imp.user_speed_mps);
  return {std::move(h_est), std::move(h_true)};
}

/// Additive estimation error: sigma^2_CE = ||H_k||^2 / SNR_CE is user k's
/// total error power, taken from the full per-user channel norm and split
/// i.i.d. across the coefficients, so that the estimate-to-channel error
/// ratio E||Hhat - H||^2 / ||H||^2 equals 1/SNR_CE for every user. The input
/// is left untouched.
inline ChannelTensor apply_estimation_noise(const ChannelTensor& h, double snr_ce_db,
                                            Rng& rng) {
  ChannelTensor out = h;
  const double inv_snr = 1.0 / db_to_linear(snr_ce_db);
  const int n_coeff = h.n_subband * h.n_rx * h.n_tx;
  for (int k = 0; k < h.n_user; ++k) {
    const double sigma_sq = h.user_norm_sq(k) * inv_snr / n_coeff;
    for (int j = 0; j < h.n_subband; ++j) {
      auto& m = out.at(k, j);
      for (int rx = 0; rx < h.n_rx; ++rx)
        for (int tx = 0; tx < h.n_tx; ++tx) m(rx, tx) += rng.complex_normal(sigma_sq);
    }
  }
  return out;
}

/// Traffic model: N_bits = 8 * floor(b / 8) with b ~ U(min, max), then one
/// uniformly chosen user forced to the full-buffer sentinel. full_buffer mode
/// gives everyone the sentinel.
inline BufferState sample_buffers(const ImpairmentConfig& imp, int n_user,
                                  std::int64_t full_sentinel_bits, Rng& rng) {
  BufferState out;
  out.bits.resize(n_user);
  if (imp.full_buffer) {
    for (auto& b : out.bits) b = full_sentinel_bits;
    return out;
  }
  for (auto& b : out.bits) {
    const double draw = rng.uniform(static_cast<double>(imp.buffer_min_bits),
                                    static_cast<double>(imp.buffer_max_bits));
    b = 8 * static_cast<std::int64_t>(std::floor(draw / 8.0));
  }
  const auto forced = static_cast<std::size_t>(rng.uniform_int(n_user));
  out.bits[forced] = full_sentinel_bits;
  return out;
}

constexpr double kAvgRateFloorBps = 1e3;

/// Average-rate initialization for one-shot episodes: a user's single-user
/// full-band Shannon-style estimate split N_user ways, floored. The estimate
/// uses the true channel's wideband SNR and the PHY symbol rate, so realized
/// PF utilities land near O(1).
inline std::vector<double> init_average_rates(const ChannelTensor& h_true,
                                              const ChannelConfig& phy, double t_tti_s) {
  const double sigma_sq = phy.noise_power_w_per_subband();
  const double symbol_rate =
      static_cast<double>(phy.n_subband()) * phy.symbols_per_subband() / t_tti_s;
  std::vector<double> out(h_true.n_user);
  for (int k = 0; k < h_true.n_user; ++k) {
    const double mean_power = h_true.user_norm_sq(k) / h_true.n_subband;
    const double snr = mean_power / sigma_sq;
    const double rate = symbol_rate * std::log2(1.0 + snr) / h_true.n_user;
    out[k] = std::max(rate, kAvgRateFloorBps);
  }
  return out;
}

/// Composes one environment. Stream layout (forks of `rng`): 0 geometry,
/// 1 multipath, 2 estimation noise, 3 buffers. Deterministic given the seed.
inline EnvironmentState sample_environment(const EnvScenario& scenario, const Rng& rng) {
  scenario.validate();
  Rng geo_rng = rng.fork(0);
  Rng ch_rng = rng.fork(1);
  Rng ce_rng = rng.fork(2);
  Rng buf_rng = rng.fork(3);

  const auto positions = sample_geometry(scenario.geometry, geo_rng, scenario.n_user);

  EnvironmentState env;
  env.phy = scenario.channel;
  env.t_tti_s = scenario.t_tti_s;
  env.full_buffer_sentinel_bits = scenario.full_buffer_sentinel_bits;
  env.noise_variance = scenario.channel.noise_power_w_per_subband();

  if (scenario.impairments.user_speed_mps > 0.0) {
    auto pair = sample_aged_pair(positions, scenario.channel, scenario.impairments, ch_rng);
    env.h_est = std::move(pair.first);
    env.h_true = std::move(pair.second);
  } else {
    env.h_true = sample_channel(positions, scenario.channel, ch_rng);
    env.h_est = env.h_true;
  }
  if (scenario.impairments.snr_ce_db.has_value())
    env.h_est = apply_estimation_noise(env.h_est, *scenario.impairments.snr_ce_db, ce_rng);

  env.buffers = sample_buffers(scenario.impairments, scenario.n_user,
                               scenario.full_buffer_sentinel_bits, buf_rng);
  env.avg_rates_bps = init_average_rates(env.h_true, scenario.channel, scenario.t_tti_s);
  return env;
}

// ---------------------------------------------------------------------------
// Environment replay records
// ---------------------------------------------------------------------------

namespace detail {

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
inline void read_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("environment record: truncated file");
}
template <typename T>
void write_pod(std::ostream& os, const T& v) {
  write_bytes(os, &v, sizeof(T));
}
template <typename T>
T read_pod(std::istream& is) {
  T v{};
  read_bytes(is, &v, sizeof(T));
  return v;
}

inline void write_tensor(std::ostream& os, const ChannelTensor& t) {
  write_pod<std::int32_t>(os, t.n_user);
  write_pod<std::int32_t>(os, t.n_subband);
  write_pod<std::int32_t>(os, t.n_rx);
  write_pod<std::int32_t>(os, t.n_tx);
  for (const auto& m : t.h)
    write_bytes(os, m.data(), sizeof(std::complex<double>) * m.size());
}

inline ChannelTensor read_tensor(std::istream& is) {
  const int n_user = read_pod<std::int32_t>(is);
  const int n_sb = read_pod<std::int32_t>(is);
  const int n_rx = read_pod<std::int32_t>(is);
  const int n_tx = read_pod<std::int32_t>(is);
  ChannelTensor t(n_user, n_sb, n_rx, n_tx);
  for (auto& m : t.h) read_bytes(is, m.data(), sizeof(std::complex<double>) * m.size());
  return t;
}

}  // namespace detail

inline constexpr char kEnvRecordMagic[9] = "SLENVREC";
inline constexpr std::uint32_t kEnvRecordVersion = 1;

inline void save_environment(std::ostream& os, const EnvironmentState& env) {
  detail::write_bytes(os, kEnvRecordMagic, 8);
  detail::write_pod(os, kEnvRecordVersion);
  detail::write_tensor(os, env.h_true);
  detail::write_tensor(os, env.h_est);
  detail::write_pod<std::int32_t>(os, static_cast<std::int32_t>(env.buffers.bits.size()));
  for (auto b : env.buffers.bits) detail::write_pod<std::int64_t>(os, b);
  for (auto r : env.avg_rates_bps) detail::write_pod<double>(os, r);
  detail::write_pod(os, env.phy);  // trivially copyable numeric struct
  detail::write_pod(os, env.noise_variance);
  detail::write_pod(os, env.t_tti_s);
  detail::write_pod(os, env.full_buffer_sentinel_bits);
}

inline EnvironmentState load_environment(std::istream& is) {
  char magic[8];
  detail::read_bytes(is, magic, 8);
  if (std::string(magic, 8) != std::string(kEnvRecordMagic, 8))
    throw std::runtime_error("environment record: bad magic");
  if (detail::read_pod<std::uint32_t>(is) != kEnvRecordVersion)
    throw std::runtime_error("environment record: unsupported version");
  EnvironmentState env;
  env.h_true = detail::read_tensor(is);
  env.h_est = detail::read_tensor(is);
  const int n_user = detail::read_pod<std::int32_t>(is);
  env.buffers.bits.resize(n_user);
  for (auto& b : env.buffers.bits) b = detail::read_pod<std::int64_t>(is);
  env.avg_rates_bps.resize(n_user);
  for (auto& r : env.avg_rates_bps) r = detail::read_pod<double>(is);
  env.phy = detail::read_pod<ChannelConfig>(is);
  env.noise_variance = detail::read_pod<double>(is);
  env.t_tti_s = detail::read_pod<double>(is);
  env.full_buffer_sentinel_bits = detail::read_pod<std::int64_t>(is);
  return env;
}

inline void save_environment(const std::string& path, const EnvironmentState& env) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  save_environment(os, env);
}

inline EnvironmentState load_environment(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_environment(is);
}

}  // namespace schedlab
