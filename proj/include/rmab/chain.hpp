#pragma once

// Markov models of the task queues and the belief-propagation kernels,
// for capacity-1 queues (scalar beliefs) and general capacity C
// (tridiagonal birth-death chains, simplex beliefs).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmab {

inline constexpr double kProbTol = 1e-12;       // probability comparisons
inline constexpr double kSimplexRejectTol = 1e-9;  // reject, never renormalize

// Thrown when an enumeration guard (action sets, memo states, tree leaves,
// graph states) would be exceeded. Carries a sizing report.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, long long needed, long long budget)
      : std::runtime_error(what + " (needed " + std::to_string(needed) +
                           ", budget " + std::to_string(budget) + ")"),
        needed_(needed),
        budget_(budget) {}
  long long needed() const { return needed_; }
  long long budget() const { return budget_; }

 private:
  long long needed_;
  long long budget_;
};

namespace detail {
inline void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(name) + " must be in [0,1], got " +
                            std::to_string(p));
  }
}

// (1 - q^n) / (1 - q), with the removable singularity at q = 1 taken as n.
inline double geometric_sum(double q, long n) {
  if (n <= 0) return 0.0;
  if (std::abs(1.0 - q) < 1e-15) return static_cast<double>(n);
  return (1.0 - std::pow(q, static_cast<double>(n))) / (1.0 - q);
}
}  // namespace detail

// Two-state queue chain: four transition probabilities, one pair per action.
// p01_*: empty -> full (new task arrives); p11_*: full -> stays full.
struct ChainC1 {
  double p01_passive = 0.0;
  double p11_passive = 0.0;
  double p01_active = 0.0;
  double p11_active = 0.0;

  ChainC1() = default;
  ChainC1(double p01_0, double p11_0, double p01_1, double p11_1)
      : p01_passive(p01_0),
        p11_passive(p11_0),
        p01_active(p01_1),
        p11_active(p11_1) {
    detail::check_probability(p01_passive, "p01_passive");
    detail::check_probability(p11_passive, "p11_passive");
    detail::check_probability(p01_active, "p01_active");
    detail::check_probability(p11_active, "p11_active");
  }

  // Gaps between the full->full and empty->full probabilities; always
  // recomputed so they cannot go stale.
  double delta0() const { return p11_passive - p01_passive; }
  double delta1() const { return p11_active - p01_active; }

  // Ordering p11_active <= p01_active <= p01_passive <= p11_passive,
  // under which the myopic policy is round robin and optimal.
  bool satisfies_assumptions() const {
    return p11_active <= p01_active && p01_active <= p01_passive &&
           p01_passive <= p11_passive;
  }
};

struct ValidationReport {
  bool eq1_holds = false;  // M divisible by K
  bool eq2_holds = false;  // chain ordering
  int nodes = 0;
  int servers = 0;
  std::string detail;
};

// Pure predicate: checks the divisibility and chain-ordering assumptions
// and names the offending values.
inline ValidationReport validate_assumptions(const ChainC1& chain, int nodes,
                                             int servers) {
  ValidationReport report;
  report.nodes = nodes;
  report.servers = servers;
  report.eq1_holds = servers >= 1 && nodes >= servers && nodes % servers == 0;
  report.eq2_holds = chain.satisfies_assumptions();
  if (!report.eq1_holds) {
    report.detail += "M=" + std::to_string(nodes) + " not divisible by K=" +
                     std::to_string(servers) + "; ";
  }
  if (!report.eq2_holds) {
    auto fmt = [](double v) { return std::to_string(v); };
    if (!(chain.p11_active <= chain.p01_active)) {
      report.detail += "p11_active " + fmt(chain.p11_active) + " > p01_active " +
                       fmt(chain.p01_active) + "; ";
    }
    if (!(chain.p01_active <= chain.p01_passive)) {
      report.detail += "p01_active " + fmt(chain.p01_active) +
                       " > p01_passive " + fmt(chain.p01_passive) + "; ";
    }
    if (!(chain.p01_passive <= chain.p11_passive)) {
      report.detail += "p01_passive " + fmt(chain.p01_passive) +
                       " > p11_passive " + fmt(chain.p11_passive) + "; ";
    }
  }
  return report;
}

// Belief of an unscheduled node after one slot of passivity.
inline double tau0_1(double omega, const ChainC1& chain) {
  detail::check_probability(omega, "omega");
  return omega * chain.delta0() + chain.p01_passive;
}

// Belief after k successive passive slots; closed form of the k-fold
// iterate of tau0_1. The delta0 = 1 case is the removable singularity
// where the geometric factor degenerates to k (and p01_passive = 0, so
// the belief is pinned at omega).
inline double tau0_k(double omega, long k, const ChainC1& chain) {
  detail::check_probability(omega, "omega");
  if (k < 0) throw std::domain_error("tau0_k: k must be nonnegative");
  if (k == 0) return omega;
  const double d0 = chain.delta0();
  return omega * std::pow(d0, static_cast<double>(k)) +
         chain.p01_passive * detail::geometric_sum(d0, k);
}

struct WeightedBelief {
  double belief = 0.0;
  double prob = 0.0;
};

// Two-point posterior for a scheduled node: the queue state is observed,
// so the next belief is a row of the active chain. Zero-probability
// branches are dropped.
inline std::vector<WeightedBelief> belief_update_scheduled_c1(
    double omega, const ChainC1& chain) {
  detail::check_probability(omega, "omega");
  std::vector<WeightedBelief> out;
  if (omega > 0.0) out.push_back({chain.p11_active, omega});
  if (omega < 1.0) out.push_back({chain.p01_active, 1.0 - omega});
  return out;
}

// Probability simplex over queue states {0,...,C}. Stores all C+1 entries;
// construction rejects vectors off the simplex by more than 1e-9 rather
// than renormalizing them.
class BeliefVec {
 public:
  explicit BeliefVec(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw std::invalid_argument("BeliefVec: empty");
    double sum = 0.0;
    for (double p : probs_) {
      if (p < -kSimplexRejectTol) {
        throw std::invalid_argument("BeliefVec: negative entry " +
                                    std::to_string(p));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexRejectTol) {
      throw std::invalid_argument("BeliefVec: entries sum to " +
                                  std::to_string(sum));
    }
  }

  static BeliefVec point_mass(int state, int capacity) {
    std::vector<double> p(static_cast<std::size_t>(capacity) + 1, 0.0);
    p.at(static_cast<std::size_t>(state)) = 1.0;
    return BeliefVec(std::move(p));
  }

  static BeliefVec uniform(int capacity) {
    std::vector<double> p(static_cast<std::size_t>(capacity) + 1,
                          1.0 / (capacity + 1));
    return BeliefVec(std::move(p));
  }

  // For capacity 1: the scalar belief P(Q = 1).
  static BeliefVec from_scalar(double omega) {
    detail::check_probability(omega, "omega");
    return BeliefVec({1.0 - omega, omega});
  }

  int capacity() const { return static_cast<int>(probs_.size()) - 1; }
  double operator[](int i) const {
    return probs_[static_cast<std::size_t>(i)];
  }
  const std::vector<double>& probs() const { return probs_; }
  double scalar() const {
    if (capacity() != 1)
      throw std::logic_error("BeliefVec::scalar requires capacity 1");
    return probs_[1];
  }

 private:
  std::vector<double> probs_;
};

// Pair of (C+1)x(C+1) row-stochastic matrices with tridiagonal support:
// at most one task is generated or dropped per slot.
class ChainGeneral {
 public:
  ChainGeneral(int capacity, std::vector<double> passive,
               std::vector<double> active)
      : capacity_(capacity),
        passive_(std::move(passive)),
        active_(std::move(active)) {
    if (capacity_ < 1) throw std::invalid_argument("capacity must be >= 1");
    const std::size_t n = dim();
    if (passive_.size() != n * n || active_.size() != n * n) {
      throw std::invalid_argument("ChainGeneral: matrix size mismatch");
    }
    validate_matrix(passive_, "passive");
    validate_matrix(active_, "active");
  }

  int capacity() const { return capacity_; }
  std::size_t dim() const { return static_cast<std::size_t>(capacity_) + 1; }

  double passive(int x, int y) const {
    return passive_[static_cast<std::size_t>(x) * dim() +
                    static_cast<std::size_t>(y)];
  }
  double active(int x, int y) const {
    return active_[static_cast<std::size_t>(x) * dim() +
                   static_cast<std::size_t>(y)];
  }

 private:
  void validate_matrix(const std::vector<double>& m, const char* name) const {
    const std::size_t n = dim();
    for (std::size_t x = 0; x < n; ++x) {
      double sum = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        const double p = m[x * n + y];
        if (p < 0.0 || p > 1.0) {
          throw std::invalid_argument(std::string("ChainGeneral ") + name +
                                      ": entry out of [0,1]");
        }
        const auto xi = static_cast<long>(x), yi = static_cast<long>(y);
        if ((yi < xi - 1 || yi > xi + 1) && p != 0.0) {
          throw std::invalid_argument(std::string("ChainGeneral ") + name +
                                      ": nonzero entry outside the "
                                      "tridiagonal band");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kProbTol) {
        throw std::invalid_argument(std::string("ChainGeneral ") + name +
                                    ": row " + std::to_string(x) +
                                    " sums to " + std::to_string(sum));
      }
    }
  }

  int capacity_;
  std::vector<double> passive_;  // row-major (C+1)^2
  std::vector<double> active_;
};

// Parameters of the birth-death queue chain: one arrival/expiration set per
// action, with dedicated boundary values for the full-queue state.
struct TridiagonalParams {
  double arrival_passive = 0.0;    // p_{01}, queue empty
  double arrival_active = 0.0;
  double up_passive = 0.0;         // p_{k,k+1}, interior k
  double up_active = 0.0;
  double down_passive = 0.0;       // p_{k,k-1}, interior k
  double down_active = 0.0;
  double stay_full_passive = 1.0;  // p_{CC}
  double stay_full_active = 1.0;
};

// Builds the two matrices. Boundary rows are completed so that each row is
// stochastic: row 0 keeps the arrival probability, row C keeps the stay
// probability, and the remaining in-band entry absorbs the complement.
inline ChainGeneral make_tridiagonal_chain(int capacity,
                                           const TridiagonalParams& p) {
  const std::size_t n = static_cast<std::size_t>(capacity) + 1;
  auto build = [&](double arrival, double up, double down, double stay_full) {
    std::vector<double> m(n * n, 0.0);
    m[0 * n + 1] = arrival;
    m[0 * n + 0] = 1.0 - arrival;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      m[k * n + (k - 1)] = down;
      m[k * n + (k + 1)] = up;
      m[k * n + k] = 1.0 - down - up;
    }
    m[(n - 1) * n + (n - 1)] = stay_full;
    m[(n - 1) * n + (n - 2)] = 1.0 - stay_full;
    return m;
  };
  return ChainGeneral(
      capacity,
      build(p.arrival_passive, p.up_passive, p.down_passive,
            p.stay_full_passive),
      build(p.arrival_active, p.up_active, p.down_active,
            p.stay_full_active));
}

// The capacity-1 chain as a general chain (row 0 = empty, row 1 = full).
inline ChainGeneral to_general(const ChainC1& chain) {
  return ChainGeneral(
      1,
      {1.0 - chain.p01_passive, chain.p01_passive, 1.0 - chain.p11_passive,
       chain.p11_passive},
      {1.0 - chain.p01_active, chain.p01_active, 1.0 - chain.p11_active,
       chain.p11_active});
}

// One slot of passivity: left-multiply the belief into the passive kernel.
inline BeliefVec propagate_passive_vec(const BeliefVec& omega,
                                       const ChainGeneral& chain) {
  if (omega.capacity() != chain.capacity()) {
    throw std::invalid_argument("propagate_passive_vec: dimension mismatch");
  }
  const int n = chain.capacity() + 1;
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int x = 0; x < n; ++x) {
    const double w = omega[x];
    if (w == 0.0) continue;
    for (int y = std::max(0, x - 1); y <= std::min(n - 1, x + 1); ++y) {
      out[static_cast<std::size_t>(y)] += w * chain.passive(x, y);
    }
  }
  return BeliefVec(std::move(out));
}

// Next-slot belief after the queue state x was observed on activation:
// the corresponding row of the active kernel.
inline BeliefVec posterior_after_activation(int observed_state,
                                            const ChainGeneral& chain) {
  const int n = chain.capacity() + 1;
  if (observed_state < 0 || observed_state >= n) {
    throw std::out_of_range("posterior_after_activation: state out of range");
  }
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int y = 0; y < n; ++y) {
    out[static_cast<std::size_t>(y)] = chain.active(observed_state, y);
  }
  return BeliefVec(std::move(out));
}

// System-level parameters shared by the solvers and the simulator.
// A non-integer node/server ratio is accepted but flagged, since the
// round-robin optimality results require an integer ratio.
struct SystemConfig {
  int nodes = 0;     // M
  int servers = 0;   // K
  int capacity = 1;  // C
  double beta = 1.0;
  std::optional<long> horizon;  // nullopt = infinite
  std::vector<BeliefVec> initial_beliefs;
  bool non_integer_ratio_warning = false;

  SystemConfig(int m, int k, int c, double beta_, std::optional<long> t,
               std::vector<BeliefVec> beliefs)
      : nodes(m),
        servers(k),
        capacity(c),
        beta(beta_),
        horizon(t),
        initial_beliefs(std::move(beliefs)) {
    if (servers < 1 || servers > nodes) {
      throw std::invalid_argument("SystemConfig: need 1 <= K <= M");
    }
    if (capacity < 1) throw std::invalid_argument("SystemConfig: C >= 1");
    if (beta < 0.0 || beta > 1.0) {
      throw std::invalid_argument("SystemConfig: beta in [0,1]");
    }
    if (!horizon.has_value() && beta >= 1.0) {
      throw std::invalid_argument(
          "SystemConfig: infinite horizon requires beta < 1");
    }
    if (horizon.has_value() && *horizon < 1) {
      throw std::invalid_argument("SystemConfig: horizon >= 1");
    }
    if (initial_beliefs.size() != static_cast<std::size_t>(nodes)) {
      throw std::invalid_argument("SystemConfig: need one belief per node");
    }
    for (const auto& b : initial_beliefs) {
      if (b.capacity() != capacity) {
        throw std::invalid_argument("SystemConfig: belief capacity mismatch");
      }
    }
    non_integer_ratio_warning = (nodes % servers != 0);
  }

  static SystemConfig capacity_one(int m, int k, double beta,
                                   std::optional<long> horizon,
                                   std::span<const double> scalar_beliefs) {
    std::vector<BeliefVec> beliefs;
    beliefs.reserve(scalar_beliefs.size());
    for (double w : scalar_beliefs) beliefs.push_back(BeliefVec::from_scalar(w));
    return SystemConfig(m, k, 1, beta, horizon, std::move(beliefs));
  }

  int group_count() const { return nodes / servers; }

  std::vector<double> scalar_beliefs() const {
    std::vector<double> out;
    out.reserve(initial_beliefs.size());
    for (const auto& b : initial_beliefs) out.push_back(b.scalar());
    return out;
  }
};

}  // namespace rmab
