#pragma once

// Whittle-relaxation upper bound for arbitrary queue capacity: the belief
// of a single arm is reset to a known row of the active kernel after each
// activation, so with a cap on the passivity run length the reachable
// belief set is finite and the relaxed problem is an occupation-measure LP.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rmab/chain.hpp"
#include "rmab/simplex.hpp"

namespace rmab {

inline constexpr double kStateDedupTol = 1e-10;

struct ReachableBeliefGraph {
  std::vector<BeliefVec> states;
  std::vector<int> gap;          // passivity run length, 1 at a reset state
  std::vector<int> passive_arc;  // successor index, -1 = forced activation
  std::vector<int> activation_posterior;  // state index per observed queue
  int initial_index = 0;
  int capacity = 0;
  int gap_cap = 0;
};

struct GraphBudget {
  long max_states = 100'000;
};

// Breadth-first closure from the initial belief and the C+1 activation
// posteriors under passive propagation. A state at gap G has its passive
// arc removed (activation forced), which keeps the graph finite; states
// within max-norm 1e-10 of an existing state are merged into it.
inline ReachableBeliefGraph build_reachable_graph(
    const ChainGeneral& chain, const BeliefVec& initial, int gap_cap,
    const GraphBudget& budget = {}) {
  if (gap_cap < 1) {
    throw std::invalid_argument("build_reachable_graph: gap cap must be >= 1");
  }
  if (initial.capacity() != chain.capacity()) {
    throw std::invalid_argument("build_reachable_graph: dimension mismatch");
  }
  ReachableBeliefGraph g;
  g.capacity = chain.capacity();
  g.gap_cap = gap_cap;
  const int n = chain.capacity() + 1;
  auto find = [&](const BeliefVec& w) -> int {
    for (std::size_t i = 0; i < g.states.size(); ++i) {
      double diff = 0.0;
      for (int y = 0; y < n; ++y) {
        diff = std::max(diff, std::abs(g.states[i][y] - w[y]));
      }
      if (diff < kStateDedupTol) return static_cast<int>(i);
    }
    return -1;
  };
  auto add = [&](const BeliefVec& w, int gap) -> std::pair<int, bool> {
    const int existing = find(w);
    if (existing >= 0) return {existing, false};
    if (static_cast<long>(g.states.size()) >= budget.max_states) {
      throw BudgetExceeded("build_reachable_graph: state budget exceeded",
                           static_cast<long>(g.states.size()) + 1,
                           budget.max_states);
    }
    g.states.push_back(w);
    g.gap.push_back(gap);
    g.passive_arc.push_back(-1);
    return {static_cast<int>(g.states.size()) - 1, true};
  };
  std::vector<int> frontier;
  const auto [init_idx, init_new] = add(initial, 1);
  g.initial_index = init_idx;
  if (init_new) frontier.push_back(init_idx);
  g.activation_posterior.resize(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) {
    const auto [idx, fresh] = add(posterior_after_activation(x, chain), 1);
    g.activation_posterior[static_cast<std::size_t>(x)] = idx;
    if (fresh) frontier.push_back(idx);
  }
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const int i = frontier[head];
    if (g.gap[static_cast<std::size_t>(i)] >= gap_cap) continue;
    const auto next = propagate_passive_vec(g.states[static_cast<std::size_t>(i)],
                                            chain);
    const auto [j, fresh] = add(next, g.gap[static_cast<std::size_t>(i)] + 1);
    g.passive_arc[static_cast<std::size_t>(i)] = j;
    if (fresh) frontier.push_back(j);
  }
  return g;
}

// Occupation-measure LP over the graph: one variable per available
// (state, action) pair, reward 1 - omega_0 on activation. Constraint rows:
// total discounted mass, the activation budget K/(M(1-beta)), and one
// balance equation per state with the unit injection at the initial state.
// Discounted occupation measures natively sum to 1/(1-beta), so the mass
// row uses that scale (the balance equations force it anyway).
// `budget_as_inequality` adds a slack variable so the activation budget
// becomes an upper limit instead of an exact equality.
inline LpProblem assemble_lp(const ReachableBeliefGraph& graph, double beta,
                             int servers, int nodes,
                             bool budget_as_inequality = false) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw std::invalid_argument("assemble_lp: beta must be in [0,1)");
  }
  const std::size_t s = graph.states.size();
  std::vector<int> passive_var(s, -1);
  std::vector<int> active_var(s, -1);
  int nv = 0;
  for (std::size_t i = 0; i < s; ++i) {
    if (graph.passive_arc[i] >= 0) passive_var[i] = nv++;
    active_var[i] = nv++;
  }
  const int slack_var = budget_as_inequality ? nv++ : -1;
  LpProblem lp;
  lp.num_vars = static_cast<std::size_t>(nv);
  lp.objective.assign(lp.num_vars, 0.0);
  lp.var_names.resize(lp.num_vars);
  for (std::size_t i = 0; i < s; ++i) {
    lp.objective[static_cast<std::size_t>(active_var[i])] =
        1.0 - graph.states[i][0];
    lp.var_names[static_cast<std::size_t>(active_var[i])] =
        "z" + std::to_string(i) + "_1";
    if (passive_var[i] >= 0) {
      lp.var_names[static_cast<std::size_t>(passive_var[i])] =
          "z" + std::to_string(i) + "_0";
    }
  }
  if (slack_var >= 0) {
    lp.var_names[static_cast<std::size_t>(slack_var)] = "budget_slack";
  }
  const std::size_t rows = s + 2;
  lp.constraints.assign(rows * lp.num_vars, 0.0);
  lp.rhs.assign(rows, 0.0);
  // Total mass.
  for (std::size_t i = 0; i < s; ++i) {
    if (passive_var[i] >= 0) {
      lp.at(0, static_cast<std::size_t>(passive_var[i])) = 1.0;
    }
    lp.at(0, static_cast<std::size_t>(active_var[i])) = 1.0;
  }
  lp.rhs[0] = 1.0 / (1.0 - beta);
  // Activation budget.
  for (std::size_t i = 0; i < s; ++i) {
    lp.at(1, static_cast<std::size_t>(active_var[i])) = 1.0;
  }
  if (slack_var >= 0) lp.at(1, static_cast<std::size_t>(slack_var)) = 1.0;
  lp.rhs[1] = static_cast<double>(servers) /
              (static_cast<double>(nodes) * (1.0 - beta));
  // Balance per state: z_i^0 + z_i^1 - beta * inflow = [i == initial].
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t row = 2 + i;
    if (passive_var[i] >= 0) {
      lp.at(row, static_cast<std::size_t>(passive_var[i])) += 1.0;
    }
    lp.at(row, static_cast<std::size_t>(active_var[i])) += 1.0;
  }
  for (std::size_t j = 0; j < s; ++j) {
    if (graph.passive_arc[j] >= 0) {
      const auto row = 2 + static_cast<std::size_t>(graph.passive_arc[j]);
      lp.at(row, static_cast<std::size_t>(passive_var[j])) -= beta;
    }
    for (int x = 0; x <= graph.capacity; ++x) {
      const double prob = graph.states[j][x];
      if (prob > 0.0) {
        const auto row =
            2 + static_cast<std::size_t>(
                    graph.activation_posterior[static_cast<std::size_t>(x)]);
        lp.at(row, static_cast<std::size_t>(active_var[j])) -= beta * prob;
      }
    }
  }
  lp.rhs[2 + static_cast<std::size_t>(graph.initial_index)] += 1.0;
  return lp;
}

struct UpperBoundResult {
  double per_arm_value = 0.0;
  double bound = 0.0;        // M x per-arm value
  double normalized = 0.0;   // bound / (K / (1-beta))
  LpStatus status = LpStatus::stalled;
  int gap_cap = 0;
  long graph_states = 0;
  // Sensitivity resolve at twice the cap; equals the primary value when the
  // doubled cap adds no states.
  std::optional<double> per_arm_value_2g;
};

// Default passivity cap: discount below 1e-9 past the cap.
inline int default_gap_cap(double beta) {
  return static_cast<int>(std::ceil(std::log(1e-9) / std::log(beta)));
}

inline UpperBoundResult upper_bound_throughput(const ChainGeneral& chain,
                                               const BeliefVec& initial,
                                               const SystemConfig& config,
                                               int gap_cap,
                                               bool sensitivity = false,
                                               const GraphBudget& budget = {}) {
  UpperBoundResult out;
  out.gap_cap = gap_cap;
  const auto graph = build_reachable_graph(chain, initial, gap_cap, budget);
  out.graph_states = static_cast<long>(graph.states.size());
  const auto lp = assemble_lp(graph, config.beta, config.servers,
                              config.nodes);
  const auto sol = simplex_solve(lp);
  out.status = sol.status;
  if (sol.status == LpStatus::optimal) {
    out.per_arm_value = sol.value;
    out.bound = config.nodes * sol.value;
    out.normalized =
        out.bound / (config.servers / (1.0 - config.beta));
  }
  if (sensitivity && sol.status == LpStatus::optimal) {
    const auto graph2 =
        build_reachable_graph(chain, initial, 2 * gap_cap, budget);
    if (graph2.states.size() == graph.states.size()) {
      out.per_arm_value_2g = out.per_arm_value;
    } else {
      const auto sol2 = simplex_solve(
          assemble_lp(graph2, config.beta, config.servers, config.nodes));
      if (sol2.status == LpStatus::optimal) {
        out.per_arm_value_2g = sol2.value;
      }
    }
  }
  return out;
}

}  // namespace rmab
