#pragma once

// Exact finite-horizon dynamic programming over the reachable belief space
// for capacity-1 queues: the optimality oracle for the myopic policy at
// desk scale.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "rmab/chain.hpp"
#include "rmab/policies.hpp"

namespace rmab {

struct BeliefStateC1 {
  std::vector<double> omegas;
  long slot = 1;
};

struct DpBudget {
  long long max_actions = 10'000;      // K-subsets per state
  long long max_states = 10'000'000;   // memoized states
};

struct DpResult {
  double value = 0.0;
  Action best_action;
  long long states_visited = 0;
};

namespace detail {

struct DpKey {
  long slot;
  std::vector<std::int64_t> quantized;

  bool operator==(const DpKey& other) const = default;
};

struct DpKeyHash {
  std::size_t operator()(const DpKey& k) const {
    std::size_t h = std::hash<long>()(k.slot);
    for (std::int64_t q : k.quantized) {
      h ^= std::hash<std::int64_t>()(q) + 0x9e3779b97f4a7c15ULL + (h << 6) +
           (h >> 2);
    }
    return h;
  }
};

// Beliefs quantized to 12 decimal digits: reachable beliefs are iterates of
// affine maps, so quantization only merges numerically identical states.
inline DpKey make_key(long slot, const std::vector<double>& omegas) {
  DpKey key;
  key.slot = slot;
  key.quantized.reserve(omegas.size());
  for (double w : omegas) {
    key.quantized.push_back(std::llround(w * 1e12));
  }
  return key;
}

inline long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline std::vector<std::vector<int>> k_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(k));
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

class DpSolver {
 public:
  DpSolver(const SystemConfig& config, const ChainC1& chain,
           const DpBudget& budget)
      : config_(config), chain_(chain), budget_(budget) {
    if (config.capacity != 1) {
      throw std::invalid_argument("bellman_value: requires capacity 1");
    }
    if (!config.horizon.has_value()) {
      throw std::invalid_argument("bellman_value: requires a finite horizon");
    }
    const long long actions = binomial(config.nodes, config.servers);
    if (actions > budget.max_actions) {
      throw BudgetExceeded("bellman_value: action set too large", actions,
                           budget.max_actions);
    }
    subsets_ = k_subsets(config.nodes, config.servers);
  }

  double solve(const std::vector<double>& omegas, long slot,
               Action* best = nullptr) {
    const long horizon = *config_.horizon;
    if (slot > horizon) return 0.0;
    const auto key = detail::make_key(slot, omegas);
    if (best == nullptr) {
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    if (static_cast<long long>(memo_.size()) >= budget_.max_states) {
      throw BudgetExceeded("bellman_value: state budget exceeded",
                           static_cast<long long>(memo_.size()) + 1,
                           budget_.max_states);
    }
    const int k = config_.servers;
    double best_value = -std::numeric_limits<double>::infinity();
    const std::vector<int>* best_set = nullptr;
    std::vector<double> next(omegas.size());
    for (const auto& subset : subsets_) {
      double reward = 0.0;
      for (int i : subset) reward += omegas[static_cast<std::size_t>(i)];
      double continuation = 0.0;
      if (slot < horizon && config_.beta > 0.0) {
        // Exact expectation over the 2^K observation outcomes; passive
        // nodes advance deterministically.
        for (std::size_t i = 0; i < omegas.size(); ++i) {
          next[i] = tau0_1(omegas[i], chain_);
        }
        const std::uint32_t branches = 1u << k;
        for (std::uint32_t bits = 0; bits < branches; ++bits) {
          double prob = 1.0;
          for (int j = 0; j < k; ++j) {
            const auto node = static_cast<std::size_t>(subset[
                static_cast<std::size_t>(j)]);
            const bool occupied = (bits >> j) & 1u;
            prob *= occupied ? omegas[node] : 1.0 - omegas[node];
            next[node] = occupied ? chain_.p11_active : chain_.p01_active;
          }
          if (prob > 0.0) {
            continuation += prob * solve(next, slot + 1);
          }
        }
      }
      const double value = reward + config_.beta * continuation;
      if (value > best_value) {
        best_value = value;
        best_set = &subset;
      }
    }
    memo_.emplace(key, best_value);
    if (best != nullptr && best_set != nullptr) {
      best->nodes = *best_set;
    }
    return best_value;
  }

  long long states_visited() const {
    return static_cast<long long>(memo_.size());
  }

 private:
  const SystemConfig& config_;
  const ChainC1& chain_;
  DpBudget budget_;
  std::vector<std::vector<int>> subsets_;
  std::unordered_map<detail::DpKey, double, detail::DpKeyHash> memo_;
};

}  // namespace detail

// Optimal throughput from the given belief state to the end of the horizon,
// by exact backward recursion with memoization on quantized beliefs.
inline DpResult bellman_value(const BeliefStateC1& state,
                              const SystemConfig& config, const ChainC1& chain,
                              const DpBudget& budget = {}) {
  for (double w : state.omegas) detail::check_probability(w, "omega");
  if (static_cast<int>(state.omegas.size()) != config.nodes) {
    throw std::invalid_argument("bellman_value: belief count != M");
  }
  detail::DpSolver solver(config, chain, budget);
  DpResult result;
  result.value = solver.solve(state.omegas, state.slot, &result.best_action);
  result.states_visited = solver.states_visited();
  return result;
}

struct OptimalityCertificate {
  double v_mp = 0.0;
  double v_star = 0.0;
  double gap = 0.0;  // v_star - v_mp
  bool passes = false;
  long long states_visited = 0;
};

// Certifies that the myopic policy attains the DP optimum on this
// instance: the gap must vanish to 1e-9 when the chain ordering holds and
// the node/server ratio is an integer.
inline OptimalityCertificate certify_mp_optimality(
    const SystemConfig& config, const ChainC1& chain,
    const DpBudget& budget = {}) {
  if (config.capacity != 1) {
    throw std::invalid_argument("certify_mp_optimality: requires capacity 1");
  }
  auto beliefs = config.scalar_beliefs();
  std::sort(beliefs.begin(), beliefs.end(), std::greater<>());
  const auto schedule =
      build_rr_schedule(beliefs, config.nodes, config.servers);
  OptimalityCertificate cert;
  cert.v_mp =
      rr_throughput(beliefs, schedule, config.horizon, config.beta, chain);
  const auto dp = bellman_value({beliefs, 1}, config, chain, budget);
  cert.v_star = dp.value;
  cert.states_visited = dp.states_visited;
  cert.gap = cert.v_star - cert.v_mp;
  cert.passes = std::abs(cert.gap) <= 1e-9;
  return cert;
}

// Sufficient-condition check for myopic optimality at one slot: scheduling
// any K-subset now and running round robin on the decreasingly ordered
// remainder must not beat the myopic value.
inline bool lemma1_check(const BeliefStateC1& state,
                         const SystemConfig& config, const ChainC1& chain) {
  if (!std::is_sorted(state.omegas.begin(), state.omegas.end(),
                      std::greater<>())) {
    throw std::invalid_argument("lemma1_check: beliefs must be sorted "
                                "decreasingly");
  }
  const int m_nodes = config.nodes;
  const int k = config.servers;
  const long long actions = detail::binomial(m_nodes, k);
  if (actions > DpBudget{}.max_actions) {
    throw BudgetExceeded("lemma1_check: action set too large", actions,
                         DpBudget{}.max_actions);
  }
  std::optional<long> remaining;
  if (config.horizon.has_value()) {
    remaining = *config.horizon - state.slot + 1;
    if (*remaining < 1) return true;
  }
  const auto identity_schedule = [&](int n) {
    std::vector<double> sorted_desc(static_cast<std::size_t>(n));
    std::iota(sorted_desc.begin(), sorted_desc.end(), 0.0);
    std::reverse(sorted_desc.begin(), sorted_desc.end());
    return build_rr_schedule(sorted_desc, n, k);
  }(m_nodes);
  const double v_mp = rr_throughput(state.omegas, identity_schedule, remaining,
                                    config.beta, chain);
  for (const auto& subset : detail::k_subsets(m_nodes, k)) {
    std::vector<double> reordered;
    reordered.reserve(state.omegas.size());
    std::vector<bool> chosen(state.omegas.size(), false);
    for (int i : subset) {
      reordered.push_back(state.omegas[static_cast<std::size_t>(i)]);
      chosen[static_cast<std::size_t>(i)] = true;
    }
    std::vector<double> rest;
    for (std::size_t i = 0; i < state.omegas.size(); ++i) {
      if (!chosen[i]) rest.push_back(state.omegas[i]);
    }
    std::sort(rest.begin(), rest.end(), std::greater<>());
    reordered.insert(reordered.end(), rest.begin(), rest.end());
    const double v = rr_throughput(reordered, identity_schedule, remaining,
                                   config.beta, chain);
    if (v > v_mp + 1e-9) return false;
  }
  return true;
}

}  // namespace rmab
