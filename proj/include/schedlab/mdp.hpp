#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "schedlab/allocation.hpp"
#include "schedlab/phy.hpp"
#include "schedlab/radio_env.hpp"

namespace schedlab {

// ---------------------------------------------------------------------------
// Action space
// ---------------------------------------------------------------------------

/// Fixed enumeration of per-subband actions: all M-combinations of the
/// (n_user + 1)-element set {user 0, ..., user n_user-1, null}, in
/// lexicographic order. The null element fills unused slots, so the table
/// size is C(n_user+1, M) and fewer than M users may be scheduled. Null
/// appears once, so a fully idle subband is only expressible when M = 1.
class ActionTable {
 public:
  ActionTable(int n_user, int m) : n_user_(n_user), m_(m) {
    if (n_user < 1 || m < 1) throw std::invalid_argument("action table: n_user, m >= 1");
    if (m > n_user + 1)
      throw std::invalid_argument("action table: m exceeds n_user + 1 slots");
    std::vector<int> combo(m);
    for (int i = 0; i < m; ++i) combo[i] = i;
    const int top = n_user;  // last selectable element (the null slot)
    while (true) {
      std::vector<int> users;
      for (int c : combo)
        if (c != top) users.push_back(c);
      actions_.push_back(std::move(users));
      int i = m - 1;
      while (i >= 0 && combo[i] == top - (m - 1 - i)) --i;
      if (i < 0) break;
      ++combo[i];
      for (int j = i + 1; j < m; ++j) combo[j] = combo[j - 1] + 1;
    }
  }

  int n_user() const { return n_user_; }
  int m() const { return m_; }
  int size() const { return static_cast<int>(actions_.size()); }

  /// Users scheduled by the action; empty for the idle action.
  const std::vector<int>& users(int action) const { return actions_.at(action); }

 private:
  int n_user_;
  int m_;
  std::vector<std::vector<int>> actions_;
};

// ---------------------------------------------------------------------------
// Episode state
// ---------------------------------------------------------------------------

/// Search state: subbands are filled left to right, one action per step, so
/// depth equals the next subband to decide and the episode is a path of
/// exactly n_subband moves.
struct EpisodeState {
  int next_subband = 0;
  AllocationMatrix allocation;

  static EpisodeState root(int n_user, int n_subband) {
    EpisodeState s;
    s.allocation = empty_allocation(n_user, n_subband);
    return s;
  }

  bool terminal() const { return next_subband >= allocation.cols(); }
};

inline EpisodeState step(const EpisodeState& state, int action, const ActionTable& table) {
  if (state.terminal()) throw std::logic_error("step: episode already terminal");
  EpisodeState next = state;
  for (int k : table.users(action)) next.allocation(k, state.next_subband) = 1;
  ++next.next_subband;
  return next;
}

// ---------------------------------------------------------------------------
// Feature encoding
// ---------------------------------------------------------------------------

/// Orientation of channel vector b against reference a, as seen through the
/// scheduler's estimate: { |<a,b>| / (||a|| ||b||), principal angle between
/// the subspaces, phase of the inner product }. Degenerate (zero) vectors
/// report maximal misalignment so they never look like good pairings.
struct PairwiseFeature {
  double alignment = 0.0;
  double angle_rad = 0.0;
  double phase_rad = 0.0;
};

inline PairwiseFeature pairwise_channel_features(const Eigen::VectorXcd& a,
                                                 const Eigen::VectorXcd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= 0.0 || nb <= 0.0) return {0.0, kPi / 2.0, 0.0};
  const std::complex<double> z = b.dot(a);  // conjugate-linear in b
  double align = std::abs(z) / (na * nb);
  align = std::clamp(align, 0.0, 1.0);
  return {align, std::acos(align), std::atan2(z.imag(), z.real())};
}

/// Feature width per (user, subband) token: 4 scalar channels plus a
/// 3-feature pairwise block against every user.
inline int feature_dim(int n_user) { return 4 + 3 * n_user; }

/// Token sequence for the network: one row per (user, subband), user-major.
/// Columns: [assigned flag, buffer fill vs sentinel, own PF average vs best,
/// estimated subband SNR squashed to ~[-1, 1], then for each other user u the
/// pairwise block (alignment, angle, phase) of this token's channel vs u's
/// channel on the same subband]. Everything visible to the scheduler at
/// decision time comes from the channel estimate, never the true channel.
inline Eigen::MatrixXd encode_features(const EnvironmentState& env,
                                       const EpisodeState& state) {
  const int n_user = env.n_user();
  const int n_sb = env.n_subband();
  const int dim = feature_dim(n_user);
  Eigen::MatrixXd features(n_user * n_sb, dim);

  const double max_avg =
      *std::max_element(env.avg_rates_bps.begin(), env.avg_rates_bps.end());
  const double sentinel = static_cast<double>(env.full_buffer_sentinel_bits);

  for (int k = 0; k < n_user; ++k) {
    for (int j = 0; j < n_sb; ++j) {
      const int row = k * n_sb + j;
      const Eigen::VectorXcd hk = env.h_est.at(k, j).reshaped();
      features(row, 0) = state.allocation(k, j) ? 1.0 : 0.0;
      features(row, 1) =
          std::min(1.0, static_cast<double>(env.buffers.bits[k]) / sentinel);
      features(row, 2) = env.avg_rates_bps[k] / max_avg;
      const double snr = hk.squaredNorm() / env.noise_variance;
      const double snr_db = 10.0 * std::log10(std::max(snr, 1e-12));
      features(row, 3) = (snr_db - 20.0) / 20.0;
      for (int u = 0; u < n_user; ++u) {
        const PairwiseFeature pf =
            u == k ? PairwiseFeature{1.0, 0.0, 0.0}
                   : pairwise_channel_features(hk, env.h_est.at(u, j).reshaped());
        features(row, 4 + 3 * u + 0) = pf.alignment;
        features(row, 4 + 3 * u + 1) = pf.angle_rad;
        features(row, 4 + 3 * u + 2) = pf.phase_rad;
      }
    }
  }
  return features;
}

}  // namespace schedlab
