#pragma once

// Seeded Monte Carlo simulation of the true queue dynamics under a policy
// that only sees the controller's beliefs, plus the exact tree-expansion
// policy evaluation used as the simulator's correctness oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rmab/chain.hpp"
#include "rmab/policies.hpp"
#include "rmab/rsab_whittle.hpp"

namespace rmab {

enum class PolicyKind { myopic, round_robin, whittle, custom };
enum class Criterion { discounted, average };

struct SimConfig {
  SystemConfig system;
  ChainGeneral chain;
  std::optional<ChainC1> chain_c1;  // present when built from a C=1 chain
  PolicyKind policy = PolicyKind::myopic;
  std::vector<std::vector<int>> custom_schedule;  // cycled, K nodes per slot
  long replications = 1000;
  std::uint64_t seed = 1;
  Criterion criterion = Criterion::discounted;
  // Horizon truncation override; by default a finite horizon is used as-is
  // and an infinite one is truncated where beta^t < 1e-6.
  std::optional<long> t_eff_override;

  static SimConfig capacity_one(const SystemConfig& system,
                                const ChainC1& chain) {
    SimConfig c{system, to_general(chain)};
    c.chain_c1 = chain;
    return c;
  }
};

struct ThroughputReport {
  double mean = 0.0;
  double std_error = 0.0;
  double normalized = 0.0;
  double normalized_std_error = 0.0;
  long replications = 0;
  std::uint64_t seed = 0;
  long t_eff = 0;
  double truncation_bias_bound = 0.0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based per-replication stream: replication r sees the same draws
// no matter how the replications are ordered or batched.
class ReplicationRng {
 public:
  ReplicationRng(std::uint64_t master_seed, long replication) {
    state_ = splitmix64(master_seed ^ splitmix64(
                            static_cast<std::uint64_t>(replication) + 1));
  }

  double uniform() {
    state_ = splitmix64(state_);
    return static_cast<double>(state_ >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Beliefs under any policy are rows of the active kernel (or the initial
// belief) propagated passively; tabulating them removes all matrix work
// from the replication loop. Reset index r < C+1 is an observed state,
// C+1+i is node i's initial belief.
class BeliefTable {
 public:
  BeliefTable(const ChainGeneral& chain,
              const std::vector<BeliefVec>& initial_beliefs, long t_eff)
      : dim_(chain.capacity() + 1), steps_(t_eff + 1) {
    const std::size_t resets = dim_ + initial_beliefs.size();
    table_.resize(resets * static_cast<std::size_t>(steps_) * dim_);
    for (std::size_t r = 0; r < resets; ++r) {
      BeliefVec w = r < dim_ ? posterior_after_activation(
                                   static_cast<int>(r), chain)
                             : initial_beliefs[r - dim_];
      for (long k = 0; k < steps_; ++k) {
        for (std::size_t y = 0; y < dim_; ++y) {
          table_[(r * static_cast<std::size_t>(steps_) +
                  static_cast<std::size_t>(k)) * dim_ + y] = w[static_cast<int>(y)];
        }
        if (k + 1 < steps_) w = propagate_passive_vec(w, chain);
      }
    }
  }

  double entry(std::size_t reset, long k, std::size_t y) const {
    return table_[(reset * static_cast<std::size_t>(steps_) +
                   static_cast<std::size_t>(k)) * dim_ + y];
  }
  double empty_prob(std::size_t reset, long k) const {
    return entry(reset, k, 0);
  }
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
  long steps_;
  std::vector<double> table_;
};

inline long resolve_t_eff(const SimConfig& config) {
  if (config.t_eff_override.has_value()) return *config.t_eff_override;
  if (config.system.horizon.has_value()) return *config.system.horizon;
  return static_cast<long>(
      std::ceil(std::log(1e-6) / std::log(config.system.beta)));
}

inline int sample_from_row(double u, std::span<const double> row) {
  double acc = 0.0;
  for (std::size_t y = 0; y < row.size(); ++y) {
    acc += row[y];
    if (u < acc) return static_cast<int>(y);
  }
  return static_cast<int>(row.size()) - 1;
}

}  // namespace detail

// Per-slot record of one replication, for calibration tests.
struct SimTrace {
  std::vector<Action> actions;
  std::vector<std::vector<int>> queue_states;  // true states at decision time
  std::vector<std::vector<int>> observations;  // observed state or -1
  std::vector<std::vector<double>> empty_beliefs;  // tracked P(Q=0)
};

namespace detail {

struct PolicyEngine {
  const SimConfig& config;
  const BeliefTable& table;
  RrSchedule rr;
  double whittle_p01 = 0.0;

  PolicyEngine(const SimConfig& cfg, const BeliefTable& tbl)
      : config(cfg), table(tbl) {
    const auto& sys = cfg.system;
    switch (cfg.policy) {
      case PolicyKind::round_robin: {
        if (!cfg.chain_c1.has_value()) {
          throw std::invalid_argument(
              "simulate: round-robin policy requires a capacity-1 chain");
        }
        rr = build_rr_schedule(sys.scalar_beliefs(), sys.nodes, sys.servers);
        break;
      }
      case PolicyKind::whittle: {
        if (!cfg.chain_c1.has_value()) {
          throw std::invalid_argument(
              "simulate: whittle policy requires a capacity-1 chain");
        }
        const auto& c1 = *cfg.chain_c1;
        const bool specialized = c1.p11_active == 0.0 &&
                                 c1.p11_passive == 1.0 &&
                                 c1.p01_active == c1.p01_passive;
        if (!specialized || sys.beta >= 1.0) {
          throw std::invalid_argument(
              "simulate: whittle policy requires the specialized chain "
              "(p11_active=0, p11_passive=1, common p01) and beta < 1");
        }
        whittle_p01 = c1.p01_active;
        break;
      }
      case PolicyKind::custom: {
        if (cfg.custom_schedule.empty()) {
          throw std::invalid_argument("simulate: empty custom schedule");
        }
        for (const auto& slot : cfg.custom_schedule) {
          if (static_cast<int>(slot.size()) != sys.servers) {
            throw std::invalid_argument(
                "simulate: custom schedule slot size != K");
          }
        }
        break;
      }
      case PolicyKind::myopic:
        break;
    }
  }

  Action act(long slot, std::span<const std::size_t> resets,
             std::span<const long> ks) const {
    const auto& sys = config.system;
    switch (config.policy) {
      case PolicyKind::myopic: {
        std::vector<double> empty(static_cast<std::size_t>(sys.nodes));
        for (int i = 0; i < sys.nodes; ++i) {
          empty[static_cast<std::size_t>(i)] =
              -table.empty_prob(resets[static_cast<std::size_t>(i)],
                                ks[static_cast<std::size_t>(i)]);
        }
        return myopic_action(empty, sys.servers);
      }
      case PolicyKind::round_robin:
        return Action{rr.group_at_slot(slot)};
      case PolicyKind::whittle: {
        std::vector<double> index(static_cast<std::size_t>(sys.nodes));
        for (int i = 0; i < sys.nodes; ++i) {
          const double occupied =
              1.0 - table.empty_prob(resets[static_cast<std::size_t>(i)],
                                     ks[static_cast<std::size_t>(i)]);
          index[static_cast<std::size_t>(i)] = whittle_index_closed(
              std::clamp(occupied, 0.0, 1.0), whittle_p01, sys.beta);
        }
        return myopic_action(index, sys.servers);
      }
      case PolicyKind::custom: {
        const auto& slot_nodes = config.custom_schedule[
            static_cast<std::size_t>((slot - 1) %
                static_cast<long>(config.custom_schedule.size()))];
        auto sorted = slot_nodes;
        std::sort(sorted.begin(), sorted.end());
        return Action{std::move(sorted)};
      }
    }
    throw std::logic_error("unreachable");
  }
};

}  // namespace detail

// One replication; returns the per-replication throughput (discounted sum
// or running average).
inline double run_replication(const SimConfig& config,
                              const detail::BeliefTable& table,
                              const detail::PolicyEngine& engine,
                              long replication, long t_eff,
                              SimTrace* trace = nullptr) {
  const auto& sys = config.system;
  const int m = sys.nodes;
  const std::size_t dim = table.dim();
  detail::ReplicationRng rng(config.seed, replication);
  std::vector<int> queue(static_cast<std::size_t>(m));
  std::vector<std::size_t> resets(static_cast<std::size_t>(m));
  std::vector<long> ks(static_cast<std::size_t>(m), 0);
  std::vector<double> row(dim);
  for (int i = 0; i < m; ++i) {
    const auto& belief = sys.initial_beliefs[static_cast<std::size_t>(i)];
    for (std::size_t y = 0; y < dim; ++y) row[y] = belief[static_cast<int>(y)];
    queue[static_cast<std::size_t>(i)] =
        detail::sample_from_row(rng.uniform(), row);
    resets[static_cast<std::size_t>(i)] =
        dim + static_cast<std::size_t>(i);  // initial-belief reset
  }
  double total = 0.0;
  double disc = 1.0;
  std::vector<bool> scheduled(static_cast<std::size_t>(m));
  for (long t = 1; t <= t_eff; ++t) {
    const Action action = engine.act(t, resets, ks);
    std::fill(scheduled.begin(), scheduled.end(), false);
    int reward = 0;
    for (int i : action.nodes) {
      scheduled[static_cast<std::size_t>(i)] = true;
      if (queue[static_cast<std::size_t>(i)] > 0) ++reward;
    }
    if (trace != nullptr) {
      trace->actions.push_back(action);
      trace->queue_states.push_back(queue);
      std::vector<int> obs(static_cast<std::size_t>(m), -1);
      std::vector<double> empty(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) {
        empty[static_cast<std::size_t>(i)] = table.empty_prob(
            resets[static_cast<std::size_t>(i)], ks[static_cast<std::size_t>(i)]);
        if (scheduled[static_cast<std::size_t>(i)]) {
          obs[static_cast<std::size_t>(i)] = queue[static_cast<std::size_t>(i)];
        }
      }
      trace->observations.push_back(std::move(obs));
      trace->empty_beliefs.push_back(std::move(empty));
    }
    total += config.criterion == Criterion::discounted
                 ? disc * reward
                 : static_cast<double>(reward);
    // Controller belief update: scheduled nodes reveal their state,
    // unscheduled beliefs advance by the passive kernel.
    for (int i = 0; i < m; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (scheduled[ui]) {
        resets[ui] = static_cast<std::size_t>(queue[ui]);
        ks[ui] = 0;
      } else {
        ++ks[ui];
      }
    }
    // True queue transitions, conditioned on the action.
    for (int i = 0; i < m; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const int x = queue[ui];
      const double u = rng.uniform();
      double acc = 0.0;
      int next = x;
      for (int y = std::max(0, x - 1);
           y <= std::min(static_cast<int>(dim) - 1, x + 1); ++y) {
        acc += scheduled[ui] ? config.chain.active(x, y)
                             : config.chain.passive(x, y);
        if (u < acc) {
          next = y;
          break;
        }
        next = y;
      }
      queue[ui] = next;
    }
    disc *= sys.beta;
  }
  return config.criterion == Criterion::discounted
             ? total
             : total / static_cast<double>(t_eff);
}

inline ThroughputReport simulate(const SimConfig& config,
                                 SimTrace* first_replication_trace = nullptr) {
  const auto& sys = config.system;
  if (config.criterion == Criterion::discounted &&
      !sys.horizon.has_value() && sys.beta >= 1.0) {
    throw std::invalid_argument(
        "simulate: discounted criterion with unbounded horizon needs beta<1");
  }
  if (config.replications < 1) {
    throw std::invalid_argument("simulate: need at least one replication");
  }
  const long t_eff = detail::resolve_t_eff(config);
  const detail::BeliefTable table(config.chain, sys.initial_beliefs, t_eff);
  const detail::PolicyEngine engine(config, table);
  double sum = 0.0;
  double sumsq = 0.0;
  for (long r = 0; r < config.replications; ++r) {
    const double v = run_replication(config, table, engine, r, t_eff,
                                     r == 0 ? first_replication_trace : nullptr);
    sum += v;
    sumsq += v * v;
  }
  ThroughputReport report;
  const auto n = static_cast<double>(config.replications);
  report.mean = sum / n;
  const double var =
      config.replications > 1
          ? std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0))
          : 0.0;
  report.std_error = std::sqrt(var / n);
  const double ideal = config.criterion == Criterion::discounted
                           ? sys.servers / (1.0 - sys.beta)
                           : static_cast<double>(sys.servers);
  report.normalized = report.mean / ideal;
  report.normalized_std_error = report.std_error / ideal;
  report.replications = config.replications;
  report.seed = config.seed;
  report.t_eff = t_eff;
  report.truncation_bias_bound =
      sys.horizon.has_value()
          ? 0.0
          : std::pow(sys.beta, static_cast<double>(t_eff)) /
                (1.0 - sys.beta);
  return report;
}

using ActionRule = std::function<Action(std::span<const double>, long)>;

// Exact policy evaluation for capacity 1 by full expansion of the
// observation tree: the deterministic counterpart of simulate.
inline double evaluate_policy_exact_c1(std::span<const double> beliefs,
                                       const ActionRule& rule, long horizon,
                                       double beta, const ChainC1& chain,
                                       long long leaf_budget = 10'000'000) {
  for (double w : beliefs) detail::check_probability(w, "omega");
  long long leaves = 0;
  std::vector<double> state(beliefs.begin(), beliefs.end());
  const std::function<double(std::vector<double>&, long)> walk =
      [&](std::vector<double>& omegas, long t) -> double {
    if (t > horizon) return 0.0;
    if (++leaves > leaf_budget) {
      throw BudgetExceeded("evaluate_policy_exact_c1: tree too large", leaves,
                           leaf_budget);
    }
    const Action action = rule(omegas, t);
    double reward = 0.0;
    for (int i : action.nodes) reward += omegas[static_cast<std::size_t>(i)];
    if (t == horizon || beta == 0.0) return reward;
    const int k = static_cast<int>(action.nodes.size());
    std::vector<double> next(omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      next[i] = tau0_1(omegas[i], chain);
    }
    double continuation = 0.0;
    const std::uint32_t branches = 1u << k;
    for (std::uint32_t bits = 0; bits < branches; ++bits) {
      double prob = 1.0;
      for (int j = 0; j < k; ++j) {
        const auto node =
            static_cast<std::size_t>(action.nodes[static_cast<std::size_t>(j)]);
        const bool occupied = (bits >> j) & 1u;
        prob *= occupied ? omegas[node] : 1.0 - omegas[node];
        next[node] = occupied ? chain.p11_active : chain.p01_active;
      }
      if (prob > 0.0) {
        std::vector<double> copy = next;
        continuation += prob * walk(copy, t + 1);
      }
    }
    return reward + beta * continuation;
  };
  return walk(state, 1);
}

}  // namespace rmab
