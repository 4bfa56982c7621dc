#pragma once

// The myopic policy, its round-robin structure, and the closed-form
// round-robin throughput.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rmab/chain.hpp"

namespace rmab {

// A scheduling decision: the K node indices (0-based, sorted) that receive
// a server this slot.
struct Action {
  std::vector<int> nodes;

  bool operator==(const Action& other) const = default;
};

// Schedules the K nodes with the largest beliefs (capacity 1). Ties break
// toward the lowest node index.
inline Action myopic_action(std::span<const double> beliefs, int servers) {
  const int m = static_cast<int>(beliefs.size());
  if (servers < 1 || servers > m) {
    throw std::invalid_argument("myopic_action: need 1 <= K <= M");
  }
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    ranked.emplace_back(-beliefs[static_cast<std::size_t>(i)], i);
  }
  std::nth_element(ranked.begin(),
                   ranked.begin() + static_cast<std::ptrdiff_t>(servers) - 1,
                   ranked.end());
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(servers));
  for (int j = 0; j < servers; ++j) {
    idx.push_back(ranked[static_cast<std::size_t>(j)].second);
  }
  std::sort(idx.begin(), idx.end());
  return Action{std::move(idx)};
}

// General capacity: schedules the K nodes with the smallest probability of
// an empty queue (equivalently, the largest immediate expected reward).
inline Action myopic_action(const std::vector<BeliefVec>& beliefs,
                            int servers) {
  std::vector<double> neg_empty;
  neg_empty.reserve(beliefs.size());
  for (const auto& b : beliefs) neg_empty.push_back(-b[0]);
  return myopic_action(neg_empty, servers);
}

// Round-robin schedule: nodes renumbered by decreasing initial belief and
// partitioned into m = M/K consecutive groups; group ((t-1) mod m) + 1 is
// scheduled at slot t.
struct RrSchedule {
  std::vector<int> node_order;          // permutation of 0..M-1
  std::vector<std::vector<int>> groups; // m groups of K sorted indices
  int period = 0;

  const std::vector<int>& group_at_slot(long t) const {
    return groups[static_cast<std::size_t>((t - 1) % period)];
  }

  // 1-based group number of a node, i.e. the slot at which it is first
  // scheduled.
  int group_of_node(int node) const {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (int i : groups[g]) {
        if (i == node) return static_cast<int>(g) + 1;
      }
    }
    throw std::out_of_range("group_of_node: unknown node");
  }
};

inline RrSchedule build_rr_schedule(std::span<const double> initial_beliefs,
                                    int nodes, int servers) {
  if (static_cast<int>(initial_beliefs.size()) != nodes) {
    throw std::invalid_argument("build_rr_schedule: belief count != M");
  }
  if (servers < 1 || nodes % servers != 0) {
    throw std::invalid_argument(
        "build_rr_schedule: M must be divisible by K");
  }
  RrSchedule s;
  s.period = nodes / servers;
  s.node_order.resize(static_cast<std::size_t>(nodes));
  std::iota(s.node_order.begin(), s.node_order.end(), 0);
  std::stable_sort(s.node_order.begin(), s.node_order.end(), [&](int a, int b) {
    return initial_beliefs[static_cast<std::size_t>(a)] >
           initial_beliefs[static_cast<std::size_t>(b)];
  });
  s.groups.resize(static_cast<std::size_t>(s.period));
  for (int g = 0; g < s.period; ++g) {
    auto& grp = s.groups[static_cast<std::size_t>(g)];
    grp.assign(s.node_order.begin() + static_cast<std::ptrdiff_t>(g) * servers,
               s.node_order.begin() +
                   static_cast<std::ptrdiff_t>(g + 1) * servers);
    std::sort(grp.begin(), grp.end());
  }
  return s;
}

namespace detail {

// Per-cycle belief map under round robin with period m: one active slot
// followed by m-1 passive slots, in expectation over the observation.
struct CycleMap {
  double alpha = 0.0;  // contraction factor delta1 * delta0^(m-1)
  double psi = 0.0;    // affine offset

  CycleMap(const ChainC1& chain, int period) {
    const double d0 = chain.delta0();
    const double d0_pow = std::pow(d0, static_cast<double>(period - 1));
    alpha = chain.delta1() * d0_pow;
    psi = chain.p01_active * d0_pow +
          chain.p01_passive * geometric_sum(d0, period - 1);
  }
};

}  // namespace detail

// Expected belief of a node at its (j+1)-th scheduled slot under round
// robin, given belief omega at its first scheduled slot: the j-fold
// iterate of the per-cycle affine map. Removable singularities (cycle
// factor 1) are evaluated as limits.
inline double phi_j(double omega, long j, const ChainC1& chain, int period) {
  detail::check_probability(omega, "omega");
  if (j < 0) throw std::domain_error("phi_j: j must be nonnegative");
  if (period < 1) throw std::domain_error("phi_j: period must be >= 1");
  if (j == 0) return omega;
  const detail::CycleMap cm(chain, period);
  return omega * std::pow(cm.alpha, static_cast<double>(j)) +
         cm.psi * detail::geometric_sum(cm.alpha, j);
}

namespace detail {

// sum_{j=0}^{H-1} b^j * j, with H < 0 meaning the infinite sum (|b| < 1).
inline double weighted_index_sum(double b, long h) {
  if (h == 0) return 0.0;
  if (std::abs(1.0 - b) < 1e-15) {
    if (h < 0) throw std::domain_error("divergent series");
    return 0.5 * static_cast<double>(h) * static_cast<double>(h - 1);
  }
  if (h < 0) return b / ((1.0 - b) * (1.0 - b));
  const double bh = std::pow(b, static_cast<double>(h));
  const double hh = static_cast<double>(h);
  return (b - hh * bh + (hh - 1.0) * bh * b) / ((1.0 - b) * (1.0 - b));
}

// sum_{j=0}^{H-1} q^j, with H < 0 meaning the infinite sum (|q| < 1).
inline double power_sum(double q, long h) {
  if (h == 0) return 0.0;
  if (h < 0) {
    if (std::abs(q) >= 1.0) throw std::domain_error("divergent series");
    return 1.0 / (1.0 - q);
  }
  return geometric_sum(q, h);
}

// Discounted reward collected from one node over its scheduled slots:
// sum_{j=1}^{H} beta^{(j-1)m} phi^{(j-1)}(omega). h < 0 means H -> infinity.
inline double theta_impl(double omega, long h, double beta,
                         const ChainC1& chain, int period) {
  if (h == 0) return 0.0;
  const CycleMap cm(chain, period);
  const double b = std::pow(beta, static_cast<double>(period));
  const double ba = b * cm.alpha;
  const double omega_part = omega * power_sum(ba, h);
  double psi_part;
  if (std::abs(1.0 - cm.alpha) > 1e-15) {
    psi_part = cm.psi * (power_sum(b, h) - power_sum(ba, h)) /
               (1.0 - cm.alpha);
  } else {
    psi_part = cm.psi * weighted_index_sum(b, h);
  }
  return omega_part + psi_part;
}

}  // namespace detail

// Closed-form discounted reward from a node scheduled H times, first at the
// current slot with belief omega, under round robin with the given period.
inline double theta_h(double omega, long h, double beta, const ChainC1& chain,
                      int period) {
  detail::check_probability(omega, "omega");
  if (h < 1) throw std::domain_error("theta_h: H must be >= 1");
  if (beta < 0.0 || beta > 1.0) throw std::domain_error("theta_h: beta");
  return detail::theta_impl(omega, h, beta, chain, period);
}

// Infinite-horizon limit of theta_h; requires beta < 1.
inline double theta_inf(double omega, double beta, const ChainC1& chain,
                        int period) {
  detail::check_probability(omega, "omega");
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw std::domain_error("theta_inf: beta must be in [0,1)");
  }
  return detail::theta_impl(omega, -1, beta, chain, period);
}

// Throughput of the round-robin policy: each node in group g first runs
// g-1 passive slots, then contributes theta over its scheduled slots,
// discounted by beta^(g-1). horizon = nullopt means infinite (beta < 1).
inline double rr_throughput(std::span<const double> initial_beliefs,
                            const RrSchedule& schedule,
                            std::optional<long> horizon, double beta,
                            const ChainC1& chain) {
  const int m = schedule.period;
  if (schedule.groups.empty() ||
      schedule.node_order.size() != initial_beliefs.size()) {
    throw std::invalid_argument("rr_throughput: schedule/beliefs mismatch");
  }
  if (!horizon.has_value() && beta >= 1.0) {
    throw std::invalid_argument(
        "rr_throughput: infinite horizon requires beta < 1");
  }
  double total = 0.0;
  for (int g = 1; g <= m; ++g) {
    long scheduled_count;
    if (!horizon.has_value()) {
      scheduled_count = -1;  // infinite
    } else {
      const long t = *horizon;
      scheduled_count = g <= t ? (t - g) / m + 1 : 0;
    }
    if (scheduled_count == 0) continue;
    const double disc = std::pow(beta, static_cast<double>(g - 1));
    for (int node : schedule.groups[static_cast<std::size_t>(g - 1)]) {
      const double w0 =
          tau0_k(initial_beliefs[static_cast<std::size_t>(node)], g - 1, chain);
      total += disc * detail::theta_impl(w0, scheduled_count, beta, chain, m);
    }
  }
  return total;
}

}  // namespace rmab
