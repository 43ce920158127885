#pragma once

#include <functional>

#include <Eigen/Core>

namespace bodegen {

struct LbfgsOptions {
  int max_iterations = 500;
  /// Stop when one accepted step improves the objective by less than this.
  double objective_tolerance = 1e-6;
  double gradient_tolerance = 1e-10;
  int memory = 10;
  /// Largest change of any coordinate in a single step.
  double max_step = 2.0;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

/// Returns f(x) and writes the gradient. May return +inf (or NaN) for infeasible points;
/// the line search then backtracks.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Minimizes with limited-memory BFGS and a backtracking Armijo line search. The returned
/// value never exceeds f(x0).
LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options = {});

}  // namespace bodegen
