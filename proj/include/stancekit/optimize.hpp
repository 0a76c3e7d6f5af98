#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stancekit {

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

// Returns nullopt for points outside the feasible region or where the
// objective could not be evaluated; the line search then backs off.
using Objective = std::function<std::optional<ObjectiveValue>(const Eigen::VectorXd&)>;

struct LbfgsOptions {
  int max_iters = 100;
  int memory = 8;
  double gradient_tolerance = 1e-5;
  // Stop when an accepted step improves the value by less than this
  // (relative to max(1, |value|)).
  double value_tolerance = 1e-10;
  int max_backtracks = 30;
  double armijo = 1e-4;
  // Largest allowed |step| in any single coordinate.
  double max_step = 2.0;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  // Value at x0 followed by every accepted iterate; nondecreasing.
  std::vector<double> trace;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string stop_reason;
};

// Limited-memory BFGS ascent with Armijo backtracking. Only steps that pass
// the sufficient-increase test are accepted. Throws NumericalError if the
// objective cannot be evaluated at x0.
LbfgsResult maximize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options);

}  // namespace stancekit
