#pragma once

#include <Eigen/Dense>
#include <vector>

namespace schedlab {

/// Scheduling decision: entry (k, j) is 1 when user k transmits on subband j.
using AllocationMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline AllocationMatrix empty_allocation(int n_user, int n_subband) {
  return AllocationMatrix::Zero(n_user, n_subband);
}

inline std::vector<int> users_on_subband(const AllocationMatrix& alloc, int subband) {
  std::vector<int> users;
  for (int k = 0; k < alloc.rows(); ++k)
    if (alloc(k, subband)) users.push_back(k);
  return users;
}

/// Every subband carries at most `max_coscheduled` users.
inline bool allocation_within_limit(const AllocationMatrix& alloc, int max_coscheduled) {
  for (int j = 0; j < alloc.cols(); ++j) {
    int count = 0;
    for (int k = 0; k < alloc.rows(); ++k) count += alloc(k, j) ? 1 : 0;
    if (count > max_coscheduled) return false;
  }
  return true;
}

}  // namespace schedlab
