#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <complex>
#include <set>
#include <vector>

#include "schedlab/mdp.hpp"
#include "schedlab/phy.hpp"
#include "schedlab/rng.hpp"

using namespace schedlab;
using Catch::Approx;

namespace {

EnvironmentState small_env(std::uint64_t seed, int n_user = 3, int n_prb = 12) {
  TbsTable table;
  EnvScenario sc;
  sc.n_user = n_user;
  sc.channel.n_prb = n_prb;
  sc.impairments.full_buffer = false;
  sc.full_buffer_sentinel_bits =
      sc.channel.n_subband() *
      table.tbs_bits(TbsTable::kNumMcs - 1, sc.channel.symbols_per_subband());
  return sample_environment(sc, Rng(seed));
}

}  // namespace

TEST_CASE("four users with two slots give ten actions: six pairs, four solos") {
  ActionTable table(4, 2);
  REQUIRE(table.size() == 10);
  int pairs = 0, solos = 0;
  std::set<std::vector<int>> seen;
  for (int a = 0; a < table.size(); ++a) {
    const auto& users = table.users(a);
    REQUIRE(seen.insert(users).second);  // all distinct
    REQUIRE(users.size() <= 2);
    REQUIRE(std::is_sorted(users.begin(), users.end()));
    if (users.size() == 2) ++pairs;
    if (users.size() == 1) ++solos;
  }
  REQUIRE(pairs == 6);
  REQUIRE(solos == 4);
}

TEST_CASE("a single user with two slots leaves exactly one action") {
  ActionTable table(1, 2);
  REQUIRE(table.size() == 1);
  REQUIRE(table.users(0) == std::vector<int>{0});
}

TEST_CASE("single-slot tables include an explicit idle action") {
  ActionTable table(3, 1);
  REQUIRE(table.size() == 4);
  int idle = 0;
  for (int a = 0; a < table.size(); ++a)
    if (table.users(a).empty()) ++idle;
  REQUIRE(idle == 1);
}

TEST_CASE("action count matches the closed-form combination count") {
  auto choose = [](int n, int k) {
    long long v = 1;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
  };
  for (int n_user : {1, 2, 4, 6})
    for (int m = 1; m <= std::min(n_user + 1, 3); ++m)
      REQUIRE(ActionTable(n_user, m).size() == choose(n_user + 1, m));
  REQUIRE_THROWS_AS(ActionTable(2, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(ActionTable(0, 1), std::invalid_argument);
}

TEST_CASE("stepping fills subbands left to right without touching the source") {
  ActionTable table(4, 2);
  auto state = EpisodeState::root(4, 3);
  REQUIRE(state.next_subband == 0);
  REQUIRE_FALSE(state.terminal());

  int pair_action = -1;
  for (int a = 0; a < table.size(); ++a)
    if (table.users(a) == std::vector<int>{1, 3}) pair_action = a;
  REQUIRE(pair_action >= 0);

  const auto next = step(state, pair_action, table);
  REQUIRE(state.allocation.sum() == 0);  // source untouched
  REQUIRE(next.next_subband == 1);
  REQUIRE(next.allocation(1, 0) == 1);
  REQUIRE(next.allocation(3, 0) == 1);
  REQUIRE(next.allocation.col(0).sum() == 2);

  auto s = next;
  s = step(s, pair_action, table);
  s = step(s, pair_action, table);
  REQUIRE(s.terminal());
  REQUIRE_THROWS_AS(step(s, 0, table), std::logic_error);
}

TEST_CASE("every reachable allocation respects the co-scheduling limit") {
  ActionTable table(4, 2);
  Rng rng(77);
  for (int episode = 0; episode < 200; ++episode) {
    auto s = EpisodeState::root(4, 3);
    while (!s.terminal()) s = step(s, static_cast<int>(rng.uniform_int(table.size())), table);
    REQUIRE(allocation_within_limit(s.allocation, 2));
  }
}

TEST_CASE("orthogonal-phase channels report full alignment at minus ninety degrees") {
  Eigen::VectorXcd a(1), b(1);
  a << std::complex<double>(1.0, 0.0);
  b << std::complex<double>(0.0, 1.0);
  const auto pf = pairwise_channel_features(a, b);
  REQUIRE(pf.alignment == Approx(1.0));
  REQUIRE(pf.angle_rad == Approx(0.0).margin(1e-12));
  REQUIRE(pf.phase_rad == Approx(-kPi / 2.0));
}

TEST_CASE("perpendicular channels report zero alignment at ninety degrees") {
  Eigen::VectorXcd a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  const auto pf = pairwise_channel_features(a, b);
  REQUIRE(pf.alignment == Approx(0.0).margin(1e-12));
  REQUIRE(pf.angle_rad == Approx(kPi / 2.0));
}

TEST_CASE("degenerate zero channels look maximally misaligned") {
  Eigen::VectorXcd a(2), b(2);
  a << 1.0, 1.0;
  b.setZero();
  const auto pf = pairwise_channel_features(a, b);
  REQUIRE(pf.alignment == 0.0);
  REQUIRE(pf.angle_rad == Approx(kPi / 2.0));
  REQUIRE(pf.phase_rad == 0.0);
}

TEST_CASE("alignment is symmetric and scale invariant, phase flips sign") {
  Rng rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXcd a(2), b(2);
    for (int i = 0; i < 2; ++i) {
      a(i) = rng.complex_normal(1.0);
      b(i) = rng.complex_normal(1.0);
    }
    const auto ab = pairwise_channel_features(a, b);
    const auto ba = pairwise_channel_features(b, a);
    REQUIRE(ab.alignment == Approx(ba.alignment));
    REQUIRE(ab.phase_rad == Approx(-ba.phase_rad));
    const auto scaled = pairwise_channel_features(3.0 * a, 0.5 * b);
    REQUIRE(scaled.alignment == Approx(ab.alignment));
    REQUIRE(scaled.angle_rad == Approx(ab.angle_rad));
  }
}

TEST_CASE("token grid has one row per user-subband pair and the declared width") {
  const auto env = small_env(900);
  const auto state = EpisodeState::root(env.n_user(), env.n_subband());
  const auto f = encode_features(env, state);
  REQUIRE(f.rows() == env.n_user() * env.n_subband());
  REQUIRE(f.cols() == feature_dim(env.n_user()));
  REQUIRE(f.allFinite());
}

TEST_CASE("assignment flags track the episode state") {
  const auto env = small_env(901);
  ActionTable table(3, 2);
  auto state = EpisodeState::root(3, env.n_subband());
  int solo1 = -1;
  for (int a = 0; a < table.size(); ++a)
    if (table.users(a) == std::vector<int>{1}) solo1 = a;
  const auto next = step(state, solo1, table);

  const auto f0 = encode_features(env, state);
  const auto f1 = encode_features(env, next);
  const int row = 1 * env.n_subband() + 0;  // user 1, subband 0
  REQUIRE(f0(row, 0) == 0.0);
  REQUIRE(f1(row, 0) == 1.0);
  // Nothing else moved.
  int diffs = 0;
  for (int r = 0; r < f0.rows(); ++r)
    for (int c = 0; c < f0.cols(); ++c)
      if (f0(r, c) != f1(r, c)) ++diffs;
  REQUIRE(diffs == 1);
}

TEST_CASE("self-pairing block is the fixed perfect-alignment token") {
  const auto env = small_env(902);
  const auto f = encode_features(env, EpisodeState::root(3, env.n_subband()));
  for (int k = 0; k < 3; ++k) {
    const int row = k * env.n_subband();
    REQUIRE(f(row, 4 + 3 * k + 0) == 1.0);
    REQUIRE(f(row, 4 + 3 * k + 1) == 0.0);
    REQUIRE(f(row, 4 + 3 * k + 2) == 0.0);
  }
}

TEST_CASE("features never peek at the true channel") {
  auto env = small_env(903);
  // Decouple the two tensors, then corrupt the true one.
  env.h_est = env.h_true;
  const auto state = EpisodeState::root(3, env.n_subband());
  const auto before = encode_features(env, state);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < env.n_subband(); ++j) env.h_true.at(k, j) *= 17.0;
  const auto after = encode_features(env, state);
  REQUIRE((before - after).norm() == 0.0);
}

TEST_CASE("swapping two users swaps their token rows and pairwise columns") {
  auto env = small_env(904);
  auto swapped = env;
  const int n_sb = env.n_subband();
  for (int j = 0; j < n_sb; ++j) {
    std::swap(swapped.h_est.at(0, j), swapped.h_est.at(1, j));
    std::swap(swapped.h_true.at(0, j), swapped.h_true.at(1, j));
  }
  std::swap(swapped.buffers.bits[0], swapped.buffers.bits[1]);
  std::swap(swapped.avg_rates_bps[0], swapped.avg_rates_bps[1]);

  const auto state = EpisodeState::root(3, n_sb);
  const auto f = encode_features(env, state);
  const auto g = encode_features(swapped, state);

  auto perm = [](int k) { return k == 0 ? 1 : (k == 1 ? 0 : k); };
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < n_sb; ++j) {
      const int row_g = k * n_sb + j;
      const int row_f = perm(k) * n_sb + j;
      for (int c = 0; c < 4; ++c) REQUIRE(g(row_g, c) == Approx(f(row_f, c)));
      for (int u = 0; u < 3; ++u)
        for (int c = 0; c < 3; ++c)
          REQUIRE(g(row_g, 4 + 3 * u + c) == Approx(f(row_f, 4 + 3 * perm(u) + c)));
    }
}

TEST_CASE("buffer and fairness features are normalized into the unit range") {
  auto env = small_env(905);
  const auto f = encode_features(env, EpisodeState::root(3, env.n_subband()));
  bool saw_full = false;
  for (int r = 0; r < f.rows(); ++r) {
    REQUIRE(f(r, 1) >= 0.0);
    REQUIRE(f(r, 1) <= 1.0);
    REQUIRE(f(r, 2) > 0.0);
    REQUIRE(f(r, 2) <= 1.0);
    if (f(r, 1) == 1.0) saw_full = true;
  }
  REQUIRE(saw_full);  // the forced full-buffer user clips to exactly one
}
