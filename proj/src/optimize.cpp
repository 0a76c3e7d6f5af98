#include "stancekit/optimize.hpp"

#include <cmath>
#include <deque>

#include "stancekit/errors.hpp"

namespace stancekit {
namespace {

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Two-loop recursion on the minimisation problem of -f; returns an ascent
// direction for f.
Eigen::VectorXd ascent_direction(const Eigen::VectorXd& grad, const std::deque<CurvaturePair>& memory) {
  Eigen::VectorXd q = -grad;
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * memory[k].s.dot(q);
    q -= alpha[k] * memory[k].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * memory[k].y.dot(q);
    q += (alpha[k] - beta) * memory[k].s;
  }
  return -q;
}

}  // namespace

LbfgsResult maximize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options) {
  LbfgsResult result;
  auto current = objective(x0);
  ++result.evaluations;
  if (!current || !std::isfinite(current->value)) {
    throw NumericalError("objective cannot be evaluated at the starting point");
  }
  result.x = std::move(x0);
  result.value = current->value;
  result.gradient = current->gradient;
  result.trace.push_back(result.value);

  std::deque<CurvaturePair> memory;
  while (result.iterations < options.max_iters) {
    if (result.gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      result.converged = true;
      result.stop_reason = "gradient tolerance";
      return result;
    }
    Eigen::VectorXd dir = ascent_direction(result.gradient, memory);
    double slope = dir.dot(result.gradient);
    if (!(slope > 0.0)) {
      memory.clear();
      dir = result.gradient;
      slope = dir.squaredNorm();
    }
    double step = 1.0;
    const double longest = dir.lpNorm<Eigen::Infinity>();
    if (longest * step > options.max_step) step = options.max_step / longest;

    std::optional<ObjectiveValue> trial;
    Eigen::VectorXd x_trial;
    bool accepted = false;
    for (int bt = 0; bt <= options.max_backtracks; ++bt, step *= 0.5) {
      x_trial = result.x + step * dir;
      trial = objective(x_trial);
      ++result.evaluations;
      if (trial && std::isfinite(trial->value) &&
          trial->value >= result.value + options.armijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.stop_reason = "line search failed";
      result.converged = true;
      return result;
    }
    ++result.iterations;
    CurvaturePair pair{x_trial - result.x, result.gradient - trial->gradient, 0.0};
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    const double improvement = trial->value - result.value;
    result.x = std::move(x_trial);
    result.value = trial->value;
    result.gradient = std::move(trial->gradient);
    result.trace.push_back(result.value);
    if (improvement < options.value_tolerance * std::max(1.0, std::abs(result.value))) {
      result.converged = true;
      result.stop_reason = "value tolerance";
      return result;
    }
  }
  result.stop_reason = "iteration limit";
  return result;
}

}  // namespace stancekit
