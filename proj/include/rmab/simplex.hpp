#pragma once

// Dense two-phase primal simplex for equality-form problems
//   maximize c'x  subject to  A x = b,  x >= 0.
// Dantzig pricing with a Bland's-rule fallback after a run of degenerate
// pivots, which guarantees termination.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmab {

struct LpProblem {
  std::size_t num_vars = 0;
  std::vector<double> objective;       // size num_vars
  std::vector<double> constraints;     // row-major, num_rows x num_vars
  std::vector<double> rhs;             // size num_rows
  std::vector<std::string> var_names;  // optional, for reports

  std::size_t num_rows() const { return rhs.size(); }
  double& at(std::size_t row, std::size_t col) {
    return constraints[row * num_vars + col];
  }
  double at(std::size_t row, std::size_t col) const {
    return constraints[row * num_vars + col];
  }
};

enum class LpStatus { optimal, infeasible, unbounded, stalled };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::stalled: return "stalled";
  }
  return "unknown";
}

struct LpSolution {
  LpStatus status = LpStatus::stalled;
  double value = 0.0;
  std::vector<double> x;
  long iterations = 0;
  double max_residual = 0.0;
};

namespace detail {

// Tableau with artificial columns appended and two objective rows
// (phase 1, phase 2) maintained in place by the pivots. The basis starts
// as the artificials, so the initial tableau is the identity on b >= 0.
class SimplexTableau {
 public:
  explicit SimplexTableau(const LpProblem& p)
      : rows_(p.num_rows()), n_(p.num_vars), cols_(p.num_vars + p.num_rows()) {
    data_.assign((rows_ + 2) * cols_, 0.0);
    rhs_.assign(rows_ + 2, 0.0);
    basis_.resize(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double sign = p.rhs[r] < 0.0 ? -1.0 : 1.0;
      for (std::size_t c = 0; c < n_; ++c) {
        data_[r * cols_ + c] = sign * p.at(r, c);
      }
      rhs_[r] = sign * p.rhs[r];
      data_[r * cols_ + n_ + r] = 1.0;
      basis_[r] = n_ + r;
    }
    // Phase-2 row: z - c with z = 0 (artificial basis carries zero cost
    // under the phase-2 objective).
    double* obj2 = row(rows_);
    for (std::size_t c = 0; c < n_; ++c) obj2[c] = -p.objective[c];
    // Phase-1 row: maximize -(sum of artificials); with the artificial
    // basis, z_c = -(column sum) for structural columns and the objective
    // value is -(sum of rhs).
    double* obj1 = row(rows_ + 1);
    for (std::size_t c = 0; c < n_; ++c) {
      double colsum = 0.0;
      for (std::size_t r = 0; r < rows_; ++r) colsum += data_[r * cols_ + c];
      obj1[c] = -colsum;
    }
    for (std::size_t r = 0; r < rows_; ++r) rhs_[rows_ + 1] -= rhs_[r];
  }

  std::size_t rows() const { return rows_; }
  std::size_t structural_vars() const { return n_; }
  std::size_t cols() const { return cols_; }
  double coeff(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  double rhs(std::size_t r) const { return rhs_[r]; }
  std::size_t basis(std::size_t r) const { return basis_[r]; }
  // Current objective values (phase 2, phase 1).
  double objective2() const { return rhs_[rows_]; }
  double objective1() const { return rhs_[rows_ + 1]; }
  double reduced_cost(std::size_t c, bool phase1) const {
    return data_[(phase1 ? rows_ + 1 : rows_) * cols_ + c];
  }

  void pivot(std::size_t prow, std::size_t pcol) {
    double* pr = row(prow);
    const double inv = 1.0 / pr[pcol];
    if (inv != 1.0) {
      for (std::size_t c = 0; c < cols_; ++c) pr[c] *= inv;
      rhs_[prow] *= inv;
    }
    pr[pcol] = 1.0;
    for (std::size_t r = 0; r < rows_ + 2; ++r) {
      if (r == prow) continue;
      double* rr = row(r);
      const double f = rr[pcol];
      if (std::abs(f) < 1e-13) {
        rr[pcol] = 0.0;
        continue;
      }
      for (std::size_t c = 0; c < cols_; ++c) rr[c] -= f * pr[c];
      rr[pcol] = 0.0;
      rhs_[r] -= f * rhs_[prow];
    }
    basis_[prow] = pcol;
  }

 private:
  double* row(std::size_t r) { return &data_[r * cols_]; }

  std::size_t rows_, n_, cols_;
  std::vector<double> data_;
  std::vector<double> rhs_;
  std::vector<std::size_t> basis_;
};

struct PricingResult {
  bool done = false;       // no improving column
  bool unbounded = false;  // improving column with no blocking row
  std::size_t col = 0;
  std::size_t row = 0;
};

// One pricing step. In Bland mode picks the lowest-index improving column
// and breaks ratio ties by lowest basis index; otherwise Dantzig pricing.
inline PricingResult price(const SimplexTableau& t, bool phase1,
                           bool allow_artificials, bool bland) {
  constexpr double kEps = 1e-9;
  const std::size_t limit = allow_artificials ? t.cols() : t.structural_vars();
  PricingResult out;
  std::size_t best_col = limit;
  double best_score = -kEps;
  for (std::size_t c = 0; c < limit; ++c) {
    const double r = t.reduced_cost(c, phase1);
    if (r < -kEps) {
      if (bland) {
        best_col = c;
        break;
      }
      if (r < best_score) {
        best_score = r;
        best_col = c;
      }
    }
  }
  if (best_col == limit) {
    out.done = true;
    return out;
  }
  out.col = best_col;
  std::size_t best_row = t.rows();
  double best_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const double a = t.coeff(r, best_col);
    if (a > 1e-11) {
      const double ratio = t.rhs(r) / a;
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && best_row != t.rows() &&
           t.basis(r) < t.basis(best_row))) {
        best_ratio = ratio;
        best_row = r;
      }
    }
  }
  if (best_row == t.rows()) {
    out.unbounded = true;
    return out;
  }
  out.row = best_row;
  return out;
}

// Runs simplex iterations against one of the objective rows. Switches to
// Bland's rule after a burst of degenerate pivots and back once progress
// resumes.
inline LpStatus run_phase(SimplexTableau& t, bool phase1,
                          bool allow_artificials, long& iterations,
                          long max_iterations) {
  long degenerate_run = 0;
  bool bland = false;
  while (iterations < max_iterations) {
    const auto step = price(t, phase1, allow_artificials, bland);
    if (step.done) return LpStatus::optimal;
    if (step.unbounded) return LpStatus::unbounded;
    const bool degenerate = t.rhs(step.row) < 1e-11;
    t.pivot(step.row, step.col);
    ++iterations;
    if (degenerate) {
      if (++degenerate_run > 40) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
  }
  return LpStatus::stalled;
}

}  // namespace detail

inline LpSolution simplex_solve(const LpProblem& problem,
                                long max_iterations = 2'000'000) {
  if (problem.objective.size() != problem.num_vars ||
      problem.constraints.size() != problem.num_rows() * problem.num_vars) {
    throw std::invalid_argument("simplex_solve: inconsistent problem sizes");
  }
  LpSolution sol;
  detail::SimplexTableau t(problem);
  LpStatus s =
      detail::run_phase(t, true, true, sol.iterations, max_iterations);
  if (s == LpStatus::stalled) {
    sol.status = LpStatus::stalled;
    return sol;
  }
  if (-t.objective1() > 1e-8) {
    sol.status = LpStatus::infeasible;
    return sol;
  }
  // Drive any residual artificials out of the basis; rows where no
  // structural pivot exists are redundant and harmless to keep.
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (t.basis(r) >= t.structural_vars()) {
      for (std::size_t c = 0; c < t.structural_vars(); ++c) {
        if (std::abs(t.coeff(r, c)) > 1e-9) {
          t.pivot(r, c);
          ++sol.iterations;
          break;
        }
      }
    }
  }
  s = detail::run_phase(t, false, false, sol.iterations, max_iterations);
  if (s == LpStatus::stalled) {
    sol.status = s;
    return sol;
  }
  sol.status = s == LpStatus::unbounded ? LpStatus::unbounded
                                        : LpStatus::optimal;
  sol.x.assign(problem.num_vars, 0.0);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (t.basis(r) < problem.num_vars) {
      sol.x[t.basis(r)] = t.rhs(r);
    }
  }
  sol.value = 0.0;
  for (std::size_t c = 0; c < problem.num_vars; ++c) {
    sol.value += problem.objective[c] * sol.x[c];
  }
  for (std::size_t r = 0; r < problem.num_rows(); ++r) {
    double lhs = 0.0;
    for (std::size_t c = 0; c < problem.num_vars; ++c) {
      lhs += problem.at(r, c) * sol.x[c];
    }
    sol.max_residual =
        std::max(sol.max_residual, std::abs(lhs - problem.rhs[r]));
  }
  return sol;
}

}  // namespace rmab
