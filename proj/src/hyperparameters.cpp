#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "stancekit/errors.hpp"
#include "stancekit/gp_inference.hpp"
#include "stancekit/optimize.hpp"

namespace stancekit {
namespace {

// Log-scale coordinates are every index except the trailing v block.
bool inside_box(const KernelSpec& like, const Eigen::VectorXd& theta, const OptimizerOptions& opt) {
  const Eigen::Index log_coords = is_icm(like) ? 1 + task_count(like) : 1;
  for (Eigen::Index i = 0; i < log_coords; ++i) {
    if (theta(i) < opt.log_lower || theta(i) > opt.log_upper) return false;
  }
  return theta.allFinite();
}

Eigen::VectorXd clamp_to_box(const KernelSpec& like, Eigen::VectorXd theta, const OptimizerOptions& opt) {
  const Eigen::Index log_coords = is_icm(like) ? 1 + task_count(like) : 1;
  for (Eigen::Index i = 0; i < log_coords; ++i) theta(i) = std::clamp(theta(i), opt.log_lower, opt.log_upper);
  return theta;
}

KernelSpec random_start(const KernelSpec& like, std::mt19937_64& rng) {
  const int d = task_count(like);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  std::vector<double> v(static_cast<std::size_t>(d));
  for (double& x : v) x = unif(rng);
  return make_icm_kernel(1.0, std::vector<double>(static_cast<std::size_t>(d), 1.0), std::move(v));
}

}  // namespace

HyperparameterFit optimize_hyperparameters(const BinaryDataset& data, const KernelSpec& kernel_init,
                                           const FitConfig& cfg, const OptimizerOptions& options) {
  data.validate();
  cfg.validate();
  validate(kernel_init);

  HyperparameterFit fit;
  fit.kernel = kernel_init;
  if (!data.has_both_labels()) {
    fit.state = ep_fit(data, kernel_init, cfg);
    fit.log_evidence = fit.initial_log_evidence = fit.state.log_evidence;
    fit.trace = {fit.log_evidence};
    fit.warnings.push_back("single-class binary problem: hyperparameter search skipped");
    return fit;
  }

  // kernel_init itself is the baseline every restart has to beat. It may
  // sit outside the search box (kappa = 0, say), so it is scored directly.
  bool have_best = false;
  try {
    EpState init = ep_fit(data, kernel_init, cfg);
    fit.initial_log_evidence = init.log_evidence;
    if (init.converged && std::isfinite(init.log_evidence)) {
      have_best = true;
      fit.log_evidence = init.log_evidence;
      fit.state = std::move(init);
      fit.trace = {fit.log_evidence};
    } else {
      fit.warnings.push_back("EP did not converge at the initial hyperparameters");
    }
  } catch (const NumericalError& e) {
    fit.initial_log_evidence = std::numeric_limits<double>::quiet_NaN();
    fit.warnings.push_back(std::string("initial hyperparameters failed: ") + e.what());
  }

  std::vector<KernelSpec> starts{kernel_init};
  if (is_icm(kernel_init)) {
    std::mt19937_64 rng(options.seed);
    for (int r = 1; r < options.restarts; ++r) starts.push_back(random_start(kernel_init, rng));
  }

  LbfgsOptions lbfgs;
  lbfgs.max_iters = options.max_iters;
  lbfgs.gradient_tolerance = options.gradient_tolerance;

  for (std::size_t r = 0; r < starts.size(); ++r) {
    const KernelSpec& start = starts[r];
    EpState warm;
    bool have_warm = false;
    // Best point seen in this restart, including rejected line-search trials.
    double local_best = -std::numeric_limits<double>::infinity();
    EpState local_state;
    Eigen::VectorXd local_theta;

    Objective objective = [&](const Eigen::VectorXd& theta) -> std::optional<ObjectiveValue> {
      if (!inside_box(start, theta, options)) return std::nullopt;
      const KernelSpec kernel = from_unconstrained(start, theta);
      EpState state;
      try {
        state = ep_fit(data, kernel, cfg, have_warm ? &warm : nullptr);
      } catch (const NumericalError&) {
        return std::nullopt;
      }
      if (!state.converged || !std::isfinite(state.log_evidence)) return std::nullopt;
      ObjectiveValue out{state.log_evidence, log_evidence_gradient(state, data, kernel)};
      if (!out.gradient.allFinite()) return std::nullopt;
      warm = state;
      have_warm = true;
      if (state.log_evidence > local_best) {
        local_best = state.log_evidence;
        local_theta = theta;
        local_state = std::move(state);
      }
      return out;
    };

    ++fit.restarts_run;
    LbfgsResult run;
    try {
      run = maximize_lbfgs(objective, clamp_to_box(start, to_unconstrained(start), options), lbfgs);
    } catch (const NumericalError& e) {
      ++fit.failed_restarts;
      fit.warnings.push_back("restart " + std::to_string(r) + " failed: " + e.what());
      continue;
    }
    // Strict improvement only: ties keep kernel_init exactly.
    if (!have_best || local_best > fit.log_evidence) {
      have_best = true;
      fit.log_evidence = local_best;
      fit.kernel = from_unconstrained(start, local_theta);
      fit.state = std::move(local_state);
      fit.trace = std::move(run.trace);
    }
  }
  if (!have_best) throw NumericalError("hyperparameter optimization failed in every restart");
  return fit;
}

}  // namespace stancekit
