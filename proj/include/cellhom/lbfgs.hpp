// Limited-memory quasi-Newton minimizer with a monotone backtracking search.
#ifndef CELLHOM_LBFGS_HPP
#define CELLHOM_LBFGS_HPP

#include "cellhom/types.hpp"

#include <functional>

namespace cellhom {

/// Returns f(x) and writes the gradient into *g when g is non-null.
using Objective = std::function<double(const Vector& x, Vector* g)>;

struct LbfgsOptions {
  double grad_tol = 1e-8;  // sup norm
  int max_iter = 5000;
  int history = 10;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  // Relative rounding level of f: changes below f_noise * max(1, |f|) are
  // treated as unresolvable.
  double f_noise = 1e-13;
};

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

/// Accepted iterates never increase f by more than its rounding level. Runs
/// that stall for 100 iterations end with line_search_failed set.
LbfgsResult lbfgs_minimize(const Objective& fun, Vector x0, const LbfgsOptions& opts);

}  // namespace cellhom

#endif  // CELLHOM_LBFGS_HPP
