#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stancekit/errors.hpp"
#include "stancekit/gp_inference.hpp"

namespace stancekit {
namespace {

// Posterior over the latent values stored as the N x N covariance.
// Only the lower triangle of sigma_ is kept current between refactors.
class FunctionSpacePosterior {
 public:
  explicit FunctionSpacePosterior(Eigen::MatrixXd k) : k_(std::move(k)), sigma_(k_), mean_(Eigen::VectorXd::Zero(k_.rows())) {}

  void refactor(const Eigen::VectorXd& tau, const Eigen::VectorXd& nu) {
    const Eigen::VectorXd sw = tau.cwiseSqrt();
    Eigen::MatrixXd b = sw.asDiagonal() * k_ * sw.asDiagonal();
    b.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) throw NumericalError("EP: I + S^1/2 K S^1/2 is not positive definite");
    chol_ = llt.matrixL();
    Eigen::MatrixXd v = sw.asDiagonal() * k_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(v);
    sigma_ = k_;
    sigma_.noalias() -= v.transpose() * v;
    mean_ = sigma_ * nu;
    if (!mean_.allFinite()) throw NumericalError("EP: posterior mean is not finite");
  }

  double variance(Eigen::Index i) { return sigma_(i, i); }
  double mean(Eigen::Index i) const { return mean_(i); }

  void update(Eigen::Index i, double d_tau, double d_nu, const Eigen::VectorXd& nu_before) {
    const Eigen::Index n = sigma_.rows();
    col_.resize(n);
    col_.head(i) = sigma_.row(i).head(i).transpose();
    col_.tail(n - i) = sigma_.col(i).tail(n - i);
    const double c = d_tau / (1.0 + d_tau * col_(i));
    const double proj = col_.dot(nu_before);
    sigma_.selfadjointView<Eigen::Lower>().rankUpdate(col_, -c);
    mean_ += (d_nu * (1.0 - c * col_(i)) - c * proj) * col_;
  }

  // Valid right after refactor().
  Eigen::VectorXd marginal_variances() const { return sigma_.diagonal(); }
  const Eigen::VectorXd& means() const { return mean_; }
  double log_det() const { return chol_.diagonal().array().log().sum(); }
  double quadratic(const Eigen::VectorXd& nu) const { return nu.dot(sigma_ * nu); }
  Eigen::MatrixXd& cholesky() { return chol_; }

 private:
  Eigen::MatrixXd k_;
  Eigen::MatrixXd sigma_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd col_;
};

// Posterior over the r feature-map weights w, f = Phi w, w ~ N(0, I).
class WeightSpacePosterior {
 public:
  explicit WeightSpacePosterior(const Eigen::MatrixXd& phi)
      : phi_(phi), cov_(Eigen::MatrixXd::Identity(phi.cols(), phi.cols())), wmean_(Eigen::VectorXd::Zero(phi.cols())) {}

  void refactor(const Eigen::VectorXd& tau, const Eigen::VectorXd& nu) {
    const Eigen::Index r = phi_.cols();
    Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(r, r);
    precision.selfadjointView<Eigen::Lower>().rankUpdate(phi_.transpose() * tau.cwiseSqrt().asDiagonal());
    Eigen::LLT<Eigen::MatrixXd> llt(precision.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) throw NumericalError("EP: I + Phi^T S Phi is not positive definite");
    chol_ = llt.matrixL();
    cov_ = llt.solve(Eigen::MatrixXd::Identity(r, r));
    wmean_ = cov_ * (phi_.transpose() * nu);
    if (!wmean_.allFinite()) throw NumericalError("EP: posterior mean is not finite");
    cached_ = -1;
  }

  double variance(Eigen::Index i) {
    a_.noalias() = cov_.selfadjointView<Eigen::Lower>() * phi_.row(i).transpose();
    cached_ = i;
    return phi_.row(i).dot(a_);
  }
  double mean(Eigen::Index i) const { return phi_.row(i).dot(wmean_); }

  void update(Eigen::Index i, double d_tau, double d_nu, const Eigen::VectorXd&) {
    if (cached_ != i) variance(i);
    const double s = phi_.row(i).dot(a_);
    const double c = d_tau / (1.0 + d_tau * s);
    const double proj = phi_.row(i).dot(wmean_);
    cov_.selfadjointView<Eigen::Lower>().rankUpdate(a_, -c);
    wmean_ += (d_nu * (1.0 - c * s) - c * proj) * a_;
    cached_ = -1;
  }

  Eigen::VectorXd marginal_variances() const { return (phi_ * cov_).cwiseProduct(phi_).rowwise().sum(); }
  Eigen::VectorXd means() const { return phi_ * wmean_; }
  double log_det() const { return chol_.diagonal().array().log().sum(); }
  double quadratic(const Eigen::VectorXd& nu) const { return (phi_.transpose() * nu).dot(wmean_); }
  Eigen::MatrixXd& cholesky() { return chol_; }

 private:
  const Eigen::MatrixXd& phi_;
  Eigen::MatrixXd cov_;
  Eigen::VectorXd wmean_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd a_;
  Eigen::Index cached_ = -1;
};

struct SweepStats {
  int sweeps = 0;
  int skipped = 0;
  bool converged = false;
  double change = 0.0;
};

template <class Posterior>
SweepStats run_sweeps(Posterior& post, const std::vector<int>& labels, Eigen::VectorXd& tau, Eigen::VectorXd& nu,
                      const FitConfig& cfg) {
  SweepStats stats;
  const Eigen::Index n = tau.size();
  Eigen::VectorXd nu_before;
  while (stats.sweeps < cfg.ep_max_sweeps && !stats.converged) {
    ++stats.sweeps;
    stats.change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s2 = post.variance(i);
      // A latent value pinned at zero by the prior cannot be moved.
      if (!(s2 > 0.0)) continue;
      const double tau_cav = 1.0 / s2 - tau(i);
      if (!(tau_cav > 0.0)) {
        ++stats.skipped;
        continue;
      }
      const double nu_cav = post.mean(i) / s2 - nu(i);
      const double var_cav = 1.0 / tau_cav;
      const double mean_cav = nu_cav * var_cav;
      const double y = labels[static_cast<std::size_t>(i)];

      // Moments of the tilted distribution Phi(y f) N(f | mean_cav, var_cav).
      const double denom = std::sqrt(1.0 + var_cav);
      const double z = y * mean_cav / denom;
      const double h = probit_hazard(z);
      const double shrink = var_cav * var_cav * h * (z + h) / (1.0 + var_cav);
      const double var_hat = var_cav - shrink;
      // 1/var_hat - 1/var_cav and mean_hat/var_hat - mean_cav/var_cav,
      // rearranged to avoid cancellation when var_cav is tiny.
      const double tau_target = std::max(0.0, shrink / (var_hat * var_cav));
      const double nu_target = (y * var_cav * h / denom + mean_cav * shrink / var_cav) / var_hat;

      const double tau_new = cfg.damping * tau_target + (1.0 - cfg.damping) * tau(i);
      const double nu_new = cfg.damping * nu_target + (1.0 - cfg.damping) * nu(i);
      if (!std::isfinite(tau_new) || !std::isfinite(nu_new)) {
        throw NumericalError("EP: non-finite site update at site " + std::to_string(i));
      }
      const double d_tau = tau_new - tau(i);
      const double d_nu = nu_new - nu(i);
      stats.change = std::max({stats.change, std::abs(d_tau), std::abs(d_nu)});
      nu_before = nu;
      post.update(i, d_tau, d_nu, nu_before);
      tau(i) = tau_new;
      nu(i) = nu_new;
    }
    // Refactorize once per sweep so rank-one round-off does not accumulate.
    post.refactor(tau, nu);
    stats.converged = stats.change < cfg.ep_tolerance;
  }
  return stats;
}

// EP approximation of log p(y|X) from the refactored posterior marginals.
double ep_log_evidence(const Eigen::VectorXd& v, const Eigen::VectorXd& mu, double log_det, double quad,
                       const Eigen::VectorXd& tau, const Eigen::VectorXd& nu, const std::vector<int>& y) {
  double log_z_tilted = 0.0;
  double cavity_terms = 0.0;
  double log_ratio_terms = 0.0;
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    if (!(v(i) > 0.0)) {
      // Point-mass latent at zero: the site was never touched and the
      // likelihood factor contributes Phi(0).
      log_z_tilted += log_probit(0.0);
      continue;
    }
    const double tau_cav = 1.0 / v(i) - tau(i);
    const double nu_cav = mu(i) / v(i) - nu(i);
    if (!(tau_cav > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double mean_cav = nu_cav / tau_cav;
    const double var_cav = 1.0 / tau_cav;
    log_z_tilted += log_probit(y[static_cast<std::size_t>(i)] * mean_cav / std::sqrt(1.0 + var_cav));
    cavity_terms += nu_cav * ((tau(i) / tau_cav) * nu_cav - 2.0 * nu(i)) * v(i);
    log_ratio_terms += std::log1p(tau(i) / tau_cav);
  }
  const double nlz =
      log_det - log_z_tilted - 0.5 * quad + 0.5 * v.dot(nu.cwiseAbs2()) - 0.5 * cavity_terms - 0.5 * log_ratio_terms;
  return -nlz;
}

template <class Posterior>
void finish(EpState& state, Posterior& post, const std::vector<int>& y, Eigen::VectorXd tau, Eigen::VectorXd nu) {
  const Eigen::VectorXd v = post.marginal_variances();
  state.posterior_mean = post.means();
  state.log_evidence = ep_log_evidence(v, state.posterior_mean, post.log_det(), post.quadratic(nu), tau, nu, y);
  state.weights = nu - tau.cwiseProduct(state.posterior_mean);
  state.posterior_variance = v;
  state.posterior_cholesky = std::move(post.cholesky());
  state.site_precision = std::move(tau);
  state.site_location = std::move(nu);
}

PosteriorForm choose_form(const BinaryDataset& data, const KernelSpec& kernel, const FitConfig& cfg) {
  if (cfg.form != PosteriorForm::automatic) return cfg.form;
  const auto n = static_cast<Eigen::Index>(data.size());
  return FeatureMap::width_for(data.inputs, kernel) < n ? PosteriorForm::weight_space : PosteriorForm::function_space;
}

Eigen::MatrixXd checked_gram(const BinaryDataset& data, const KernelSpec& kernel, const FitConfig& cfg) {
  Eigen::MatrixXd k = gram_matrix(data.inputs, kernel, cfg.jitter);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Gram matrix is not positive definite after adding jitter " + std::to_string(cfg.jitter));
  }
  return k;
}

void check_sites(const BinaryDataset& data, const Eigen::VectorXd& tau, const Eigen::VectorXd& nu) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (tau.size() != n || nu.size() != n) throw ConfigError("site parameters do not match the dataset size");
  if ((tau.array() < 0.0).any() || !tau.allFinite() || !nu.allFinite()) {
    throw ConfigError("site precisions must be finite and non-negative");
  }
}

// Shared driver: optionally sweeps, then rebuilds everything from the sites.
EpState fit_impl(const BinaryDataset& data, const KernelSpec& kernel, const FitConfig& cfg, Eigen::VectorXd tau,
                 Eigen::VectorXd nu, bool warm, bool sweep) {
  EpState state;
  state.form = choose_form(data, kernel, cfg);
  SweepStats stats;
  if (state.form == PosteriorForm::weight_space) {
    auto map = std::make_shared<const FeatureMap>(data.inputs, kernel);
    WeightSpacePosterior post(map->training_rows());
    if (warm) post.refactor(tau, nu);
    if (sweep) stats = run_sweeps(post, data.labels, tau, nu, cfg);
    post.refactor(tau, nu);
    finish(state, post, data.labels, std::move(tau), std::move(nu));
    state.feature_map = std::move(map);
  } else {
    FunctionSpacePosterior post(sweep ? checked_gram(data, kernel, cfg) : gram_matrix(data.inputs, kernel, cfg.jitter));
    if (warm) post.refactor(tau, nu);
    if (sweep) stats = run_sweeps(post, data.labels, tau, nu, cfg);
    post.refactor(tau, nu);
    finish(state, post, data.labels, std::move(tau), std::move(nu));
  }
  state.converged = stats.converged;
  state.sweeps_used = stats.sweeps;
  state.last_sweep_change = stats.change;
  state.skipped_updates = stats.skipped;
  return state;
}

}  // namespace

void FitConfig::validate() const {
  if (!(ep_tolerance > 0.0)) throw ConfigError("ep_tolerance must be positive");
  if (ep_max_sweeps < 1) throw ConfigError("ep_max_sweeps must be at least 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
  if (!(jitter >= 0.0)) throw ConfigError("jitter must be non-negative");
}

bool BinaryDataset::has_both_labels() const {
  bool pos = false, neg = false;
  for (int y : labels) (y > 0 ? pos : neg) = true;
  return pos && neg;
}

void BinaryDataset::validate() const {
  if (inputs.empty()) throw ConfigError("binary dataset is empty");
  if (inputs.size() != labels.size()) throw ConfigError("binary dataset has mismatched inputs and labels");
  for (int y : labels) {
    if (y != 1 && y != -1) throw ConfigError("binary labels must be +1 or -1");
  }
}

EpState ep_state_from_sites(const BinaryDataset& data, const KernelSpec& kernel, const FitConfig& cfg,
                            Eigen::VectorXd site_precision, Eigen::VectorXd site_location) {
  data.validate();
  validate(kernel);
  check_sites(data, site_precision, site_location);
  return fit_impl(data, kernel, cfg, std::move(site_precision), std::move(site_location), true, false);
}

EpState ep_fit(const BinaryDataset& data, const KernelSpec& kernel, const FitConfig& cfg, const EpState* warm_start) {
  data.validate();
  cfg.validate();
  validate(kernel);
  const auto n = static_cast<Eigen::Index>(data.size());
  if (warm_start && warm_start->site_precision.size() == n && warm_start->site_location.size() == n) {
    check_sites(data, warm_start->site_precision, warm_start->site_location);
    return fit_impl(data, kernel, cfg, warm_start->site_precision, warm_start->site_location, true, true);
  }
  return fit_impl(data, kernel, cfg, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), false, true);
}

LatentPrediction predict_latent(const EpState& state, const BinaryDataset& data, const KernelSpec& kernel,
                                const TaskedInput& test, double jitter) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (state.weights.size() != n) throw ConfigError("EP state does not belong to this dataset");
  const Eigen::VectorXd ks = cross_covariance(data.inputs, kernel, test);
  LatentPrediction out;
  out.mean = ks.dot(state.weights);
  const double prior = evaluate(kernel, test, test);
  if (state.form == PosteriorForm::weight_space) {
    if (!state.feature_map) throw ConfigError("weight-space EP state has no feature map");
    Eigen::VectorXd phi = state.feature_map->map(test);
    const double explained = phi.squaredNorm();
    state.posterior_cholesky.triangularView<Eigen::Lower>().solveInPlace(phi);
    out.variance = prior - explained + phi.squaredNorm();
  } else {
    if (state.posterior_cholesky.rows() != n) throw ConfigError("EP state does not belong to this dataset");
    Eigen::VectorXd v = state.site_precision.cwiseSqrt().cwiseProduct(ks);
    state.posterior_cholesky.triangularView<Eigen::Lower>().solveInPlace(v);
    out.variance = prior - v.squaredNorm();
  }
  if (out.variance < 0.0) {
    out.variance = jitter;
    out.variance_clamped = true;
  }
  return out;
}

double predict_probability(const EpState& state, const BinaryDataset& data, const KernelSpec& kernel,
                           const TaskedInput& test, double jitter, int* clamped_variances) {
  const LatentPrediction latent = predict_latent(state, data, kernel, test, jitter);
  if (latent.variance_clamped && clamped_variances) ++*clamped_variances;
  return probit(latent.mean / std::sqrt(1.0 + latent.variance));
}

Eigen::VectorXd log_evidence_gradient(const EpState& state, const BinaryDataset& data, const KernelSpec& kernel) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (state.weights.size() != n) throw ConfigError("EP state does not belong to this dataset");
  // d log Z / d theta = 1/2 tr(F dK/dtheta) with
  // F = alpha alpha^T - (K + S^-1)^-1.
  Eigen::MatrixXd f = state.weights * state.weights.transpose();
  if (state.form == PosteriorForm::weight_space) {
    // (K + S^-1)^-1 = S - S Phi (I + Phi^T S Phi)^-1 Phi^T S
    const FeatureMap map(data.inputs, kernel);
    Eigen::MatrixXd g = map.training_rows().transpose() * state.site_precision.asDiagonal();
    state.posterior_cholesky.triangularView<Eigen::Lower>().solveInPlace(g);
    f.noalias() += g.transpose() * g;
    f.diagonal() -= state.site_precision;
  } else {
    // (K + S^-1)^-1 = S^1/2 B^-1 S^1/2 = R^T R, R = L^-1 S^1/2
    Eigen::MatrixXd r = state.site_precision.cwiseSqrt().asDiagonal();
    state.posterior_cholesky.triangularView<Eigen::Lower>().solveInPlace(r);
    f.noalias() -= r.transpose() * r;
  }
  const Eigen::MatrixXd weighted = f.cwiseProduct(data_gram(data.inputs));
  return 0.5 * contract_gram_derivatives(kernel, task_weighted_sums(data.inputs, kernel, weighted));
}

}  // namespace stancekit
