#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "schedlab/allocation.hpp"
#include "schedlab/radio_env.hpp"

namespace schedlab {

// ---------------------------------------------------------------------------
// Link adaptation tables
// ---------------------------------------------------------------------------

constexpr double kBlepTarget = 0.1;
constexpr double kPfRewardScale = 0.1;

/// MCS table: 16 entries with spectral efficiency swept geometrically from
/// 0.15 to 5.5 bit/symbol. Modulation order steps QPSK / 16QAM / 64QAM with
/// efficiency; the transport block size is the efficiency times the symbol
/// budget, byte-aligned downward.
class TbsTable {
 public:
  static constexpr int kNumMcs = 16;

  TbsTable() {
    const double lo = 0.15, hi = 5.5;
    for (int i = 0; i < kNumMcs; ++i) {
      efficiency_[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (kNumMcs - 1));
      if (efficiency_[i] <= 1.0) order_[i] = 2;
      else if (efficiency_[i] <= 3.0) order_[i] = 4;
      else order_[i] = 6;
    }
  }

  int size() const { return kNumMcs; }
  double efficiency(int mcs) const { return efficiency_[check(mcs)]; }
  int modulation_order(int mcs) const { return order_[check(mcs)]; }

  /// Transport block size in bits for one transmission spanning
  /// `n_symbols` resource elements.
  std::int64_t tbs_bits(int mcs, std::int64_t n_symbols) const {
    const double raw = efficiency_[check(mcs)] * static_cast<double>(n_symbols);
    return 8 * static_cast<std::int64_t>(std::floor(raw / 8.0));
  }

  /// Code rate of the block relative to its modulation capacity.
  double code_rate(int mcs, std::int64_t n_symbols) const {
    const double capacity = static_cast<double>(order_[check(mcs)]) *
                            static_cast<double>(n_symbols);
    return static_cast<double>(tbs_bits(mcs, n_symbols)) / capacity;
  }

 private:
  int check(int mcs) const {
    if (mcs < 0 || mcs >= kNumMcs) throw std::out_of_range("mcs index out of range");
    return mcs;
  }
  double efficiency_[kNumMcs];
  int order_[kNumMcs];
};

/// Mutual-information link quality model. Per-subband SINR maps to capped
/// mutual information with a per-MCS implementation gap; the mean MI across
/// the transmission feeds a logistic block-error curve centered at the MCS
/// code rate times the modulation order.
class MiBlepModel {
 public:
  explicit MiBlepModel(const TbsTable& table) : table_(&table) {}

  double gap_db(int mcs) const { return 1.0 + 2.0 * mcs / (TbsTable::kNumMcs - 1.0); }

  double mutual_information(double sinr, int mcs) const {
    const double gap = db_to_linear(gap_db(mcs));
    const double mi = std::log2(1.0 + sinr / gap);
    return std::min(mi, static_cast<double>(table_->modulation_order(mcs)));
  }

  double mean_mutual_information(const std::vector<double>& sinrs, int mcs) const {
    if (sinrs.empty()) return 0.0;
    double acc = 0.0;
    for (double s : sinrs) acc += mutual_information(s, mcs);
    return acc / static_cast<double>(sinrs.size());
  }

  /// Logistic BLEP in the mean-MI domain, slope 20, threshold at the spectral
  /// load (code rate x modulation order) of the chosen MCS.
  double blep(double mean_mi, int mcs, std::int64_t n_symbols) const {
    const double threshold =
        table_->code_rate(mcs, n_symbols) * table_->modulation_order(mcs);
    return 1.0 / (1.0 + std::exp(20.0 * (mean_mi - threshold)));
  }

 private:
  const TbsTable* table_;
};

// ---------------------------------------------------------------------------
// Precoding and SINR
// ---------------------------------------------------------------------------

/// Unit-norm precoding vectors for the users co-scheduled on one subband,
/// aligned index-for-index with `users`.
struct PrecoderSet {
  std::vector<int> users;
  std::vector<Eigen::VectorXcd> w;
};

/// SLNR (leakage-suppressing) precoders: w_k is the normalized solution of
/// (I + (1/sigma^2) * sum_{i != k} H_i^H H_i) w = H_k^H for single-antenna
/// receivers. The inverse is built once from the all-user Gram matrix and
/// each user's own contribution is removed with a rank-one downdate
/// (Sherman-Morrison), so the cost stays O(n_tx^2) per user after one
/// O(n_tx^3) factorization.
inline PrecoderSet compute_precoders(const ChannelTensor& h, int subband,
                                     const std::vector<int>& users, double noise_variance) {
  if (h.n_rx != 1)
    throw std::invalid_argument("precoder: only single-antenna receivers supported");
  for (int k : users)
    if (k < 0 || k >= h.n_user) throw std::out_of_range("precoder: bad user index");

  PrecoderSet out;
  out.users = users;
  out.w.reserve(users.size());
  const int n_tx = h.n_tx;
  const double inv_sigma = 1.0 / noise_variance;

  // A = I + (1/sigma^2) sum_i h_i^H h_i over all co-scheduled users.
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n_tx, n_tx);
  for (int k : users) {
    const Eigen::RowVectorXcd row = h.at(k, subband).row(0);
    a.noalias() += inv_sigma * row.adjoint() * row;
  }
  const Eigen::MatrixXcd a_inv = a.inverse();

  for (int k : users) {
    const Eigen::RowVectorXcd row = h.at(k, subband).row(0);
    const Eigen::VectorXcd u = row.adjoint();
    // Remove user k's own term: (A - (1/sigma^2) u u^H)^{-1} via Sherman-Morrison.
    const Eigen::VectorXcd ai_u = a_inv * u;
    const std::complex<double> denom = 1.0 - inv_sigma * (row * ai_u)(0, 0);
    const Eigen::VectorXcd w_raw = ai_u + ai_u * (inv_sigma * (row * ai_u)(0, 0) / denom);
    const double norm = w_raw.norm();
    out.w.push_back(norm > 0.0 ? Eigen::VectorXcd(w_raw / norm)
                               : Eigen::VectorXcd(Eigen::VectorXcd::Zero(n_tx)));
  }
  return out;
}

/// Post-precoding SINR per scheduled user on one subband:
/// ||H_k w_k||^2 / (sigma^2 + sum_{i != k} ||H_k w_i||^2).
inline std::vector<double> compute_sinr(const ChannelTensor& h, int subband,
                                        const PrecoderSet& precoders,
                                        double noise_variance) {
  std::vector<double> out(precoders.users.size());
  for (std::size_t a = 0; a < precoders.users.size(); ++a) {
    const auto& hk = h.at(precoders.users[a], subband);
    const double signal = (hk * precoders.w[a]).squaredNorm();
    double interference = 0.0;
    for (std::size_t b = 0; b < precoders.users.size(); ++b)
      if (b != a) interference += (hk * precoders.w[b]).squaredNorm();
    out[a] = signal / (noise_variance + interference);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Link adaptation and decision evaluation
// ---------------------------------------------------------------------------

struct LinkAdaptResult {
  int mcs = -1;                 // -1: no MCS satisfies the BLEP target
  std::int64_t tbs_bits = 0;
};

/// Highest-throughput MCS whose predicted BLEP stays below the target, over
/// a full table scan. Ties on TBS resolve to the lowest MCS index.
inline LinkAdaptResult link_adapt(const std::vector<double>& sinrs, std::int64_t n_symbols,
                                  const TbsTable& table, const MiBlepModel& model) {
  LinkAdaptResult best;
  for (int mcs = 0; mcs < table.size(); ++mcs) {
    const double mi = model.mean_mutual_information(sinrs, mcs);
    if (model.blep(mi, mcs, n_symbols) >= kBlepTarget) continue;
    const std::int64_t tbs = table.tbs_bits(mcs, n_symbols);
    if (tbs > best.tbs_bits) {
      best.tbs_bits = tbs;
      best.mcs = mcs;
    }
  }
  return best;
}

/// Delivered rate: (1 - BLEP) * min(TBS, buffered bits) / T_TTI.
inline double user_rate_bps(std::int64_t tbs_bits, double blep, std::int64_t buffer_bits,
                            double t_tti_s) {
  const std::int64_t delivered = std::min(tbs_bits, buffer_bits);
  return (1.0 - blep) * static_cast<double>(delivered) / t_tti_s;
}

struct LinkResult {
  int user = -1;
  int mcs = -1;
  std::int64_t tbs_bits = 0;
  double blep = 1.0;     // realized, on the true channel
  double rate_bps = 0.0;
  double pf_utility = 0.0;
};

struct DecisionResult {
  std::vector<LinkResult> links;
  double reward = 0.0;
};

/// Scores a complete allocation. Precoders, SINR prediction, and link
/// adaptation all run on the scheduler's channel estimate; the realized SINR
/// (and hence BLEP and rate) then comes from replaying the same precoders and
/// chosen MCS on the true channel. With perfect CSI the two stages agree.
inline DecisionResult evaluate_decision(const EnvironmentState& env,
                                        const AllocationMatrix& alloc, int max_coscheduled,
                                        const TbsTable& table, const MiBlepModel& model) {
  if (alloc.rows() != env.n_user() || alloc.cols() != env.n_subband())
    throw std::invalid_argument("evaluate_decision: allocation shape mismatch");
  if (!allocation_within_limit(alloc, max_coscheduled))
    throw std::invalid_argument("evaluate_decision: too many users on a subband");

  const int n_user = env.n_user();
  const int n_sb = env.n_subband();
  const std::int64_t n_symbols = env.phy.symbols_per_subband();

  // Per-user lists of (subband, slot) assignments plus per-subband precoders.
  std::vector<PrecoderSet> est_precoders(n_sb);
  std::vector<std::vector<double>> est_sinr(n_sb), true_sinr(n_sb);
  for (int j = 0; j < n_sb; ++j) {
    const auto users = users_on_subband(alloc, j);
    if (users.empty()) continue;
    est_precoders[j] = compute_precoders(env.h_est, j, users, env.noise_variance);
    est_sinr[j] = compute_sinr(env.h_est, j, est_precoders[j], env.noise_variance);
    true_sinr[j] = compute_sinr(env.h_true, j, est_precoders[j], env.noise_variance);
  }

  DecisionResult result;
  for (int k = 0; k < n_user; ++k) {
    std::vector<double> est, realized;
    std::int64_t symbols_total = 0;
    for (int j = 0; j < n_sb; ++j) {
      const auto& users = est_precoders[j].users;
      for (std::size_t a = 0; a < users.size(); ++a) {
        if (users[a] != k) continue;
        est.push_back(est_sinr[j][a]);
        realized.push_back(true_sinr[j][a]);
        symbols_total += n_symbols;
      }
    }
    if (est.empty()) continue;

    const LinkAdaptResult la = link_adapt(est, symbols_total, table, model);
    LinkResult link;
    link.user = k;
    link.mcs = la.mcs;
    link.tbs_bits = la.tbs_bits;
    if (la.mcs >= 0) {
      const double mi = model.mean_mutual_information(realized, la.mcs);
      link.blep = model.blep(mi, la.mcs, symbols_total);
      link.rate_bps = user_rate_bps(la.tbs_bits, link.blep, env.buffers.bits[k], env.t_tti_s);
    } else {
      link.blep = 1.0;
      link.rate_bps = 0.0;
    }
    link.pf_utility = link.rate_bps / env.avg_rates_bps[k];
    result.reward += kPfRewardScale * link.pf_utility;
    result.links.push_back(link);
  }
  return result;
}

}  // namespace schedlab
