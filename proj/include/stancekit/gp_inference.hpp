#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stancekit/kernels.hpp"

namespace stancekit {

// Standard normal CDF, computed through erfc so both tails keep full
// relative precision.
double probit(double z);
// log Phi(z), finite for every finite z.
double log_probit(double z);
// N(z) / Phi(z), the inverse Mills ratio, stable for very negative z.
double probit_hazard(double z);

// How the Gaussian posterior is stored during EP. Function space keeps the
// N x N covariance; weight space keeps the r x r covariance of the
// explicit feature-map weights (see FeatureMap) and is exact without
// jitter. `automatic` picks weight space when r < N.
enum class PosteriorForm { automatic, function_space, weight_space };

struct FitConfig {
  double ep_tolerance = 1e-6;
  int ep_max_sweeps = 100;
  // Weight on the freshly moment-matched site; 1 disables damping.
  double damping = 0.8;
  // Added to the Gram diagonal in function space.
  double jitter = 1e-8;
  PosteriorForm form = PosteriorForm::automatic;

  void validate() const;
};

struct BinaryDataset {
  std::vector<TaskedInput> inputs;
  std::vector<int> labels;  // +1 / -1

  std::size_t size() const { return inputs.size(); }
  bool has_both_labels() const;
  void validate() const;
};

// Converged (or last-iterate) EP approximation of a binary probit GP.
//
// Each likelihood term Phi(y_i f_i) is replaced by an unnormalised Gaussian
// site with natural parameters (site_precision, site_location). The
// Gaussian posterior over the latent values is N(Sigma nu, Sigma) with
//   Sigma = (K^-1 + S)^-1,  S = diag(site_precision).
// In function space posterior_cholesky is L with L L^T = I + S^1/2 K S^1/2;
// in weight space it is L with L L^T = I + Phi^T S Phi, and feature_map
// holds Phi's column layout for mapping test inputs.
struct EpState {
  PosteriorForm form = PosteriorForm::function_space;
  Eigen::VectorXd site_precision;
  Eigen::VectorXd site_location;
  Eigen::MatrixXd posterior_cholesky;
  std::shared_ptr<const FeatureMap> feature_map;
  // (K + S^-1)^-1 S^-1 nu; the predictive mean is k_*^T weights.
  Eigen::VectorXd weights;
  Eigen::VectorXd posterior_mean;
  Eigen::VectorXd posterior_variance;
  double log_evidence = 0.0;
  bool converged = false;
  int sweeps_used = 0;
  double last_sweep_change = 0.0;
  // Site updates skipped because the cavity variance went non-positive.
  int skipped_updates = 0;
};

// Runs sequential EP sweeps (site order 0..N-1) until the largest site
// change in a sweep drops below cfg.ep_tolerance. A non-converged run is
// returned with converged = false. Throws NumericalError when the jittered
// Gram matrix is not positive definite or the iteration produces NaNs.
//
// `warm_start`, when given, must hold sites for the same N; EP resumes
// from them instead of from zero.
EpState ep_fit(const BinaryDataset& data, const KernelSpec& kernel, const FitConfig& cfg,
               const EpState* warm_start = nullptr);

// Rebuilds the posterior factors and evidence from fixed site parameters.
// ep_fit finishes with this call, so a state reloaded from its sites alone
// predicts bit-identically.
EpState ep_state_from_sites(const BinaryDataset& data, const KernelSpec& kernel, const FitConfig& cfg,
                            Eigen::VectorXd site_precision, Eigen::VectorXd site_location);

struct LatentPrediction {
  double mean = 0.0;
  double variance = 0.0;
  bool variance_clamped = false;
};

LatentPrediction predict_latent(const EpState& state, const BinaryDataset& data, const KernelSpec& kernel,
                                const TaskedInput& test, double jitter = 1e-8);

// p(y* = +1 | data) = Phi(mean / sqrt(1 + variance)). Negative predictive
// variances (round-off) are clamped to `jitter` and counted in
// `clamped_variances` when provided.
double predict_probability(const EpState& state, const BinaryDataset& data, const KernelSpec& kernel,
                           const TaskedInput& test, double jitter = 1e-8, int* clamped_variances = nullptr);

// Gradient of the EP log evidence over the unconstrained coordinates of
// `kernel` (see to_unconstrained), with the site parameters held fixed.
Eigen::VectorXd log_evidence_gradient(const EpState& state, const BinaryDataset& data, const KernelSpec& kernel);

struct OptimizerOptions {
  int max_iters = 50;
  int restarts = 3;
  std::uint64_t seed = 0;
  // Box on the log-scale coordinates; keeps EP away from overflow.
  double log_lower = -12.0;
  double log_upper = 12.0;
  double gradient_tolerance = 1e-5;
};

struct HyperparameterFit {
  KernelSpec kernel;
  EpState state;
  double log_evidence = 0.0;
  double initial_log_evidence = 0.0;
  int restarts_run = 0;
  int failed_restarts = 0;
  // Evidence of every accepted iterate of the winning restart, in order.
  std::vector<double> trace;
  std::vector<std::string> warnings;
};

// Maximizes the EP evidence by L-BFGS in unconstrained space. Restart 0
// starts from kernel_init (clamped into the box); further restarts use
// sigma^2 = 1, kappa = 1, v ~ U(-0.5, 0.5) from the seeded generator
// (linear kernels have no random coordinates, so they run a single
// restart). kernel_init comes back unchanged unless a restart finds
// strictly higher evidence. One-class data skips the search and returns
// kernel_init with a warning. Throws NumericalError only if neither
// kernel_init nor any restart yields a converged EP fit.
HyperparameterFit optimize_hyperparameters(const BinaryDataset& data, const KernelSpec& kernel_init,
                                           const FitConfig& cfg, const OptimizerOptions& options);

}  // namespace stancekit
