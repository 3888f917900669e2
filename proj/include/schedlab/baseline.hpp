#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "schedlab/allocation.hpp"
#include "schedlab/phy.hpp"
#include "schedlab/radio_env.hpp"

namespace schedlab {

// ---------------------------------------------------------------------------
// Greedy marginal-utility baseline
// ---------------------------------------------------------------------------

/// Working state of the greedy scheduler: which subbands still accept users,
/// who sits where, and the per-(user, subband) single-subband rate estimates
/// under the current occupancy.
struct PftfState {
  std::vector<bool> available;             // subband still in play
  std::vector<std::vector<int>> sb_of_user;  // allocated subbands per user
  std::vector<std::vector<int>> user_of_sb;  // occupancy per subband, sorted
  Eigen::MatrixXd rates;                   // rate estimate for allocated pairs
};

/// Time-frequency proportional-fair utility of handing `candidate_rate` to a
/// user whose current allocation already earns `allocated_rates`:
///   (sum + candidate) / (avg + sum), or 0 once the bits already promised
/// exceed the buffer.
inline double pftf_utility(const std::vector<double>& allocated_rates,
                           double candidate_rate, double avg_rate_bps,
                           std::int64_t buffer_bits, double t_tti_s) {
  double current = 0.0;
  for (double r : allocated_rates) current += r;
  if (current * t_tti_s > static_cast<double>(buffer_bits)) return 0.0;
  return (current + candidate_rate) / (avg_rate_bps + current);
}

namespace detail {

/// Single-subband rate estimate for `user` under occupancy `users` (which
/// must contain it): SLNR precoding and link adaptation on the channel
/// estimate, uncapped by the buffer so the utility's buffer test stays
/// meaningful.
inline double pftf_rate_estimate(const EnvironmentState& env, int user, int subband,
                                 const std::vector<int>& users, const TbsTable& table,
                                 const MiBlepModel& model) {
  const PrecoderSet pre = compute_precoders(env.h_est, subband, users, env.noise_variance);
  const std::vector<double> sinr = compute_sinr(env.h_est, subband, pre, env.noise_variance);
  std::size_t slot = 0;
  while (users[slot] != user) ++slot;
  const std::vector<double> own{sinr[slot]};
  const LinkAdaptResult la =
      link_adapt(own, env.phy.symbols_per_subband(), table, model);
  if (la.mcs < 0) return 0.0;
  const double mi = model.mean_mutual_information(own, la.mcs);
  const double blep = model.blep(mi, la.mcs, env.phy.symbols_per_subband());
  return (1.0 - blep) * static_cast<double>(la.tbs_bits) / env.t_tti_s;
}

}  // namespace detail

/// Greedy marginal-utility scheduling. Each round scores every
/// (user, open subband) pair by the utility gain of adding that subband to
/// the user's allocation, allocates the best strictly-positive pair, and
/// otherwise retires the pair's subband. Rates on the touched subband are
/// re-estimated after every allocation since co-scheduling changes SINR.
/// Ties break toward the lowest user, then lowest subband. Sees only the
/// channel estimate.
inline AllocationMatrix pftf_schedule(const EnvironmentState& env, int max_coscheduled,
                                      const TbsTable& table, const MiBlepModel& model,
                                      PftfState* state_out = nullptr) {
  const int n_user = env.n_user();
  const int n_sb = env.n_subband();
  PftfState st;
  st.available.assign(n_sb, true);
  st.sb_of_user.assign(n_user, {});
  st.user_of_sb.assign(n_sb, {});
  st.rates = Eigen::MatrixXd::Zero(n_user, n_sb);

  auto user_rates = [&](int k) {
    std::vector<double> out;
    out.reserve(st.sb_of_user[k].size());
    for (int j : st.sb_of_user[k]) out.push_back(st.rates(k, j));
    return out;
  };

  while (true) {
    for (int j = 0; j < n_sb; ++j)
      if (st.available[j] &&
          static_cast<int>(st.user_of_sb[j].size()) >= max_coscheduled)
        st.available[j] = false;
    if (std::none_of(st.available.begin(), st.available.end(), [](bool b) { return b; }))
      break;

    int best_user = -1, best_sb = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_user; ++k) {
      const std::vector<double> current = user_rates(k);
      const double u_current =
          current.empty() ? 0.0
                          : pftf_utility(current, 0.0, env.avg_rates_bps[k],
                                         env.buffers.bits[k], env.t_tti_s);
      for (int j = 0; j < n_sb; ++j) {
        if (!st.available[j]) continue;
        const auto& occ = st.user_of_sb[j];
        if (std::find(occ.begin(), occ.end(), k) != occ.end()) continue;
        std::vector<int> with_k = occ;
        with_k.insert(std::lower_bound(with_k.begin(), with_k.end(), k), k);
        const double cand = detail::pftf_rate_estimate(env, k, j, with_k, table, model);
        const double gain = pftf_utility(current, cand, env.avg_rates_bps[k],
                                         env.buffers.bits[k], env.t_tti_s) -
                            u_current;
        if (gain > best_gain) {
          best_gain = gain;
          best_user = k;
          best_sb = j;
        }
      }
    }
    if (best_user < 0) break;  // no candidate pair at all

    if (best_gain > 0.0) {
      auto& occ = st.user_of_sb[best_sb];
      occ.insert(std::lower_bound(occ.begin(), occ.end(), best_user), best_user);
      st.sb_of_user[best_user].push_back(best_sb);
      for (int u : occ)
        st.rates(u, best_sb) = detail::pftf_rate_estimate(env, u, best_sb, occ, table, model);
    } else {
      st.available[best_sb] = false;
    }
  }

  AllocationMatrix alloc = empty_allocation(n_user, n_sb);
  for (int j = 0; j < n_sb; ++j)
    for (int k : st.user_of_sb[j]) alloc(k, j) = 1;
  if (state_out != nullptr) *state_out = std::move(st);
  return alloc;
}

}  // namespace schedlab
