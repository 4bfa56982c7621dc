#pragma once

// Experiment orchestration shared by the CLI and the acceptance suite:
// randomized optimality certification sweeps, index grids, bound sweeps,
// and the fig6 study (myopic-policy Monte Carlo against the LP bound over
// queue capacity and node/server ratio).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmab/chain.hpp"
#include "rmab/exact_dp.hpp"
#include "rmab/montecarlo.hpp"
#include "rmab/policies.hpp"
#include "rmab/relaxed_bound.hpp"
#include "rmab/rsab_whittle.hpp"

namespace rmab {

namespace detail {

// Deterministic instance sampler built on the same counter-based stream
// as the simulator.
class InstanceRng {
 public:
  explicit InstanceRng(std::uint64_t seed) : rng_(seed, 0) {}
  double uniform() { return rng_.uniform(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  long pick_index(std::size_t n) {
    return static_cast<long>(uniform() * static_cast<double>(n)) %
           static_cast<long>(n);
  }

 private:
  ReplicationRng rng_;
};

}  // namespace detail

// Random chain satisfying the ordering assumption: four sorted uniforms.
inline ChainC1 random_ordered_chain(detail::InstanceRng& rng) {
  std::vector<double> v{rng.uniform(), rng.uniform(), rng.uniform(),
                        rng.uniform()};
  std::sort(v.begin(), v.end());
  return ChainC1(v[2], v[3], v[1], v[0]);
}

struct DpVerifyParams {
  long instances = 100;
  std::vector<std::pair<int, int>> node_server_pairs{
      {2, 1}, {3, 1}, {4, 1}, {2, 2}, {4, 2}};
  std::vector<long> horizons{1, 2, 3, 4, 5};
  std::vector<double> betas{0.5, 0.9, 1.0};
  std::uint64_t seed = 2024;
  DpBudget budget;
};

struct DpVerifyRow {
  int nodes = 0;
  int servers = 0;
  long horizon = 0;
  double beta = 0.0;
  ChainC1 chain;
  std::vector<double> beliefs;
  double v_mp = 0.0;
  double v_star = 0.0;
  double gap = 0.0;
  bool pass = false;
  std::string status = "ok";
};

inline std::vector<DpVerifyRow> dp_verify_sweep(const DpVerifyParams& params) {
  detail::InstanceRng rng(params.seed);
  std::vector<DpVerifyRow> rows;
  rows.reserve(static_cast<std::size_t>(params.instances));
  for (long i = 0; i < params.instances; ++i) {
    DpVerifyRow row;
    const auto& pair = params.node_server_pairs[static_cast<std::size_t>(
        rng.pick_index(params.node_server_pairs.size()))];
    row.nodes = pair.first;
    row.servers = pair.second;
    row.horizon =
        params.horizons[static_cast<std::size_t>(rng.pick_index(
            params.horizons.size()))];
    row.beta = params.betas[static_cast<std::size_t>(rng.pick_index(
        params.betas.size()))];
    row.chain = random_ordered_chain(rng);
    row.beliefs.resize(static_cast<std::size_t>(row.nodes));
    for (auto& w : row.beliefs) w = rng.uniform();
    try {
      const auto config = SystemConfig::capacity_one(
          row.nodes, row.servers, row.beta, row.horizon, row.beliefs);
      const auto cert = certify_mp_optimality(config, row.chain, params.budget);
      row.v_mp = cert.v_mp;
      row.v_star = cert.v_star;
      row.gap = cert.gap;
      row.pass = cert.passes;
    } catch (const BudgetExceeded& e) {
      row.status = std::string("budget: ") + e.what();
      row.pass = false;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

struct WhittleGridParams {
  std::vector<double> p01_values{0.1, 0.3, 0.5, 0.8};
  std::vector<double> beta_values{0.5, 0.9, 0.99};
  double omega_start = 0.0;
  double omega_stop = 1.0;
  double omega_step = 0.05;
};

struct WhittleGridRow {
  double p01 = 0.0;
  double beta = 0.0;
  double omega = 0.0;
  double w_closed = 0.0;
  double w_numeric = 0.0;
  double abs_diff = 0.0;
};

inline std::vector<WhittleGridRow> whittle_grid(
    const WhittleGridParams& params) {
  std::vector<WhittleGridRow> rows;
  for (double p01 : params.p01_values) {
    for (double beta : params.beta_values) {
      for (double omega = params.omega_start;
           omega <= params.omega_stop + 1e-12; omega += params.omega_step) {
        WhittleGridRow row;
        row.p01 = p01;
        row.beta = beta;
        row.omega = std::min(omega, 1.0);
        row.w_closed = whittle_index_closed(row.omega, p01, beta);
        row.w_numeric = whittle_index_numeric(row.omega, p01, beta);
        row.abs_diff = std::abs(row.w_closed - row.w_numeric);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

inline std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    out.push_back(lo + (hi - lo) * i / (points - 1));
  }
  return out;
}

// Parameter block of the capacity study: arrivals slow down and service
// drains the queue under activation; discount 0.95, K = 3 servers,
// uniform initial beliefs.
inline TridiagonalParams fig6_chain_params() {
  TridiagonalParams p;
  p.arrival_passive = 0.15;
  p.arrival_active = 0.05;
  p.up_passive = 0.10;
  p.up_active = 0.0;
  p.down_passive = 0.05;
  p.down_active = 0.95;
  p.stay_full_passive = 0.90;
  p.stay_full_active = 0.05;
  return p;
}

struct Fig6Params {
  std::vector<int> capacities{1, 2, 3, 4, 5, 6};
  std::vector<int> ratios{1, 3, 10};  // M/K
  int servers = 3;
  double beta = 0.95;
  TridiagonalParams chain = fig6_chain_params();
  long replications = 20'000;
  std::uint64_t seed = 7;
  std::optional<int> gap_cap;  // default: discount cutoff
  bool sensitivity = false;    // re-solve the bound at twice the cap
  GraphBudget graph_budget;
};

struct Fig6Row {
  std::string series;  // "mp" or "bound"
  int capacity = 0;
  int ratio = 0;
  int nodes = 0;
  int servers = 0;
  double beta = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  double normalized = 0.0;
  double normalized_std_error = 0.0;
  int gap_cap = 0;
  long t_eff = 0;
  std::string lp_status;
  std::uint64_t seed = 0;
  std::string status = "ok";
};

inline std::vector<Fig6Row> fig6_run(const Fig6Params& params) {
  std::vector<Fig6Row> rows;
  const int gap_cap =
      params.gap_cap.value_or(default_gap_cap(params.beta));
  for (int capacity : params.capacities) {
    const auto chain = make_tridiagonal_chain(capacity, params.chain);
    const auto initial = BeliefVec::uniform(capacity);
    std::optional<ReachableBeliefGraph> graph;
    std::string graph_error;
    try {
      graph = build_reachable_graph(chain, initial, gap_cap,
                                    params.graph_budget);
    } catch (const BudgetExceeded& e) {
      graph_error = e.what();
    }
    for (int ratio : params.ratios) {
      const int nodes = ratio * params.servers;
      const std::vector<BeliefVec> beliefs(static_cast<std::size_t>(nodes),
                                           initial);
      const SystemConfig system(nodes, params.servers, capacity, params.beta,
                                std::nullopt, beliefs);
      // Myopic-policy Monte Carlo.
      {
        SimConfig sim{system, chain};
        sim.policy = PolicyKind::myopic;
        sim.replications = params.replications;
        sim.seed = params.seed;
        const auto report = simulate(sim);
        Fig6Row row;
        row.series = "mp";
        row.capacity = capacity;
        row.ratio = ratio;
        row.nodes = nodes;
        row.servers = params.servers;
        row.beta = params.beta;
        row.value = report.mean;
        row.std_error = report.std_error;
        row.normalized = report.normalized;
        row.normalized_std_error = report.normalized_std_error;
        row.t_eff = report.t_eff;
        row.seed = report.seed;
        rows.push_back(std::move(row));
      }
      // Relaxation bound.
      {
        Fig6Row row;
        row.series = "bound";
        row.capacity = capacity;
        row.ratio = ratio;
        row.nodes = nodes;
        row.servers = params.servers;
        row.beta = params.beta;
        row.gap_cap = gap_cap;
        if (!graph.has_value()) {
          row.status = graph_error;
          row.lp_status = "skipped";
        } else {
          const auto lp = assemble_lp(*graph, params.beta, params.servers,
                                      nodes);
          const auto sol = simplex_solve(lp);
          row.lp_status = to_string(sol.status);
          if (sol.status == LpStatus::optimal) {
            row.value = nodes * sol.value;
            row.normalized =
                row.value / (params.servers / (1.0 - params.beta));
          } else {
            row.status = "lp did not reach optimality";
          }
        }
        rows.push_back(std::move(row));
      }
    }
    // Optional sensitivity resolve of the per-arm bound at twice the cap,
    // reported as an extra series (budget-independent graph, one row per
    // ratio).
    if (params.sensitivity && graph.has_value()) {
      for (int ratio : params.ratios) {
        const int nodes = ratio * params.servers;
        const std::vector<BeliefVec> beliefs(static_cast<std::size_t>(nodes),
                                             initial);
        const SystemConfig system(nodes, params.servers, capacity,
                                  params.beta, std::nullopt, beliefs);
        const auto bound = upper_bound_throughput(chain, initial, system,
                                                  gap_cap, true,
                                                  params.graph_budget);
        if (bound.per_arm_value_2g.has_value()) {
          Fig6Row row;
          row.series = "bound_2g";
          row.capacity = capacity;
          row.ratio = ratio;
          row.nodes = nodes;
          row.servers = params.servers;
          row.beta = params.beta;
          row.gap_cap = 2 * gap_cap;
          row.value = nodes * *bound.per_arm_value_2g;
          row.normalized = row.value / (params.servers / (1.0 - params.beta));
          row.lp_status = "optimal";
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

struct UpperBoundSweepParams {
  std::vector<int> capacities{1, 2, 3};
  std::vector<int> ratios{1, 3, 10};
  int servers = 3;
  double beta = 0.95;
  TridiagonalParams chain = fig6_chain_params();
  std::optional<int> gap_cap;
  bool sensitivity = true;
  GraphBudget graph_budget;
};

struct UpperBoundRow {
  int capacity = 0;
  int ratio = 0;
  double bound = 0.0;
  double normalized = 0.0;
  int gap_cap = 0;
  std::string lp_status;
  long graph_states = 0;
  double bound_2g = 0.0;  // 0 when sensitivity is off or unavailable
};

inline std::vector<UpperBoundRow> upper_bound_sweep(
    const UpperBoundSweepParams& params) {
  std::vector<UpperBoundRow> rows;
  const int gap_cap = params.gap_cap.value_or(default_gap_cap(params.beta));
  for (int capacity : params.capacities) {
    const auto chain = make_tridiagonal_chain(capacity, params.chain);
    const auto initial = BeliefVec::uniform(capacity);
    for (int ratio : params.ratios) {
      const int nodes = ratio * params.servers;
      const std::vector<BeliefVec> beliefs(static_cast<std::size_t>(nodes),
                                           initial);
      const SystemConfig system(nodes, params.servers, capacity, params.beta,
                                std::nullopt, beliefs);
      UpperBoundRow row;
      row.capacity = capacity;
      row.ratio = ratio;
      row.gap_cap = gap_cap;
      try {
        const auto result =
            upper_bound_throughput(chain, initial, system, gap_cap,
                                   params.sensitivity, params.graph_budget);
        row.bound = result.bound;
        row.normalized = result.normalized;
        row.lp_status = to_string(result.status);
        row.graph_states = result.graph_states;
        if (result.per_arm_value_2g.has_value()) {
          row.bound_2g = nodes * *result.per_arm_value_2g;
        }
      } catch (const BudgetExceeded& e) {
        row.lp_status = std::string("budget: ") + e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace rmab
