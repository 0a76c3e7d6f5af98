#include "stancekit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stancekit/errors.hpp"

namespace stancekit {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_task(int task, int count) {
  if (task < 0 || task >= count) {
    throw ConfigError("task id " + std::to_string(task) + " outside [0, " + std::to_string(count) +
                      "): task mapping does not match the kernel");
  }
}

}  // namespace

KernelSpec make_linear_kernel(double signal_variance) {
  KernelSpec spec = LinearKernelParams{signal_variance};
  validate(spec);
  return spec;
}

KernelSpec make_icm_kernel(double signal_variance, std::vector<double> kappa, std::vector<double> v) {
  KernelSpec spec = IcmKernelParams{LinearKernelParams{signal_variance}, std::move(kappa), std::move(v)};
  validate(spec);
  return spec;
}

void validate(const KernelSpec& spec) {
  auto check_sigma = [](const LinearKernelParams& p) {
    if (!(p.signal_variance > 0.0) || !std::isfinite(p.signal_variance)) {
      throw ConfigError("signal variance must be positive and finite");
    }
  };
  std::visit(overloaded{[&](const LinearKernelParams& p) { check_sigma(p); },
                        [&](const IcmKernelParams& p) {
                          check_sigma(p.data_kernel);
                          if (p.kappa.empty()) throw ConfigError("ICM kernel needs at least one task");
                          if (p.kappa.size() != p.v.size()) {
                            throw ConfigError("ICM kappa and v must both have one entry per task");
                          }
                          for (double k : p.kappa) {
                            if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("ICM kappa entries must be >= 0");
                          }
                          for (double x : p.v) {
                            if (!std::isfinite(x)) throw ConfigError("ICM v entries must be finite");
                          }
                        }},
             spec);
}

int task_count(const KernelSpec& spec) {
  if (const auto* icm = std::get_if<IcmKernelParams>(&spec)) return icm->task_count();
  return 1;
}

double signal_variance(const KernelSpec& spec) {
  if (const auto* icm = std::get_if<IcmKernelParams>(&spec)) return icm->data_kernel.signal_variance;
  return std::get<LinearKernelParams>(spec).signal_variance;
}

bool is_icm(const KernelSpec& spec) { return std::holds_alternative<IcmKernelParams>(spec); }

Eigen::MatrixXd coregionalisation_matrix(const KernelSpec& spec) {
  const auto* icm = std::get_if<IcmKernelParams>(&spec);
  if (!icm) return Eigen::MatrixXd::Ones(1, 1);
  const int d = icm->task_count();
  Eigen::MatrixXd b(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) b(i, j) = icm->v[i] * icm->v[j] + (i == j ? icm->kappa[i] : 0.0);
  }
  return b;
}

double linear_kernel(const SparseFeatureVector& a, const SparseFeatureVector& b, const LinearKernelParams& p) {
  return p.signal_variance * static_cast<double>(dot(a, b));
}

double icm_kernel(const TaskedInput& a, const TaskedInput& b, const IcmKernelParams& p) {
  const int d = p.task_count();
  check_task(a.task_id, d);
  check_task(b.task_id, d);
  double coreg = p.v[a.task_id] * p.v[b.task_id];
  if (a.task_id == b.task_id) coreg += p.kappa[a.task_id];
  return linear_kernel(a.features, b.features, p.data_kernel) * coreg;
}

double evaluate(const KernelSpec& spec, const TaskedInput& a, const TaskedInput& b) {
  return std::visit(overloaded{[&](const LinearKernelParams& p) { return linear_kernel(a.features, b.features, p); },
                               [&](const IcmKernelParams& p) { return icm_kernel(a, b, p); }},
                    spec);
}

Eigen::MatrixXd data_gram(std::span<const TaskedInput> inputs) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      g(i, j) = static_cast<double>(dot(inputs[i].features, inputs[j].features));
      g(j, i) = g(i, j);
    }
  }
  return g;
}

Eigen::MatrixXd gram_matrix(std::span<const TaskedInput> inputs, const KernelSpec& spec, double jitter) {
  if (inputs.empty()) throw ConfigError("gram_matrix needs at least one input");
  const int tasks = task_count(spec);
  if (is_icm(spec)) {
    for (const auto& in : inputs) check_task(in.task_id, tasks);
  }
  const Eigen::MatrixXd b = coregionalisation_matrix(spec);
  const double s2 = signal_variance(spec);
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ti = is_icm(spec) ? inputs[i].task_id : 0;
    for (Eigen::Index j = 0; j <= i; ++j) {
      const int tj = is_icm(spec) ? inputs[j].task_id : 0;
      k(i, j) = s2 * static_cast<double>(dot(inputs[i].features, inputs[j].features)) * b(ti, tj);
      k(j, i) = k(i, j);
    }
    k(i, i) += jitter;
  }
  return k;
}

Eigen::VectorXd cross_covariance(std::span<const TaskedInput> inputs, const KernelSpec& spec,
                                 const TaskedInput& test) {
  Eigen::VectorXd k(static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) k(static_cast<Eigen::Index>(i)) = evaluate(spec, inputs[i], test);
  return k;
}

namespace {

// Sorted distinct feature ids per block; see FeatureMap.
std::vector<std::vector<std::int32_t>> collect_blocks(std::span<const TaskedInput> inputs, const KernelSpec& spec) {
  const bool icm = is_icm(spec);
  const int tasks = task_count(spec);
  std::vector<std::vector<std::int32_t>> blocks(icm ? static_cast<std::size_t>(tasks) + 1 : 1);
  for (const auto& in : inputs) {
    if (icm) check_task(in.task_id, tasks);
    for (const auto& e : in.features.entries()) {
      if (icm) blocks[static_cast<std::size_t>(in.task_id)].push_back(e.index);
      blocks.back().push_back(e.index);
    }
  }
  for (auto& b : blocks) {
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
  }
  return blocks;
}

// Column scale of block `block` for an input of task `task`.
double block_scale(const KernelSpec& spec, std::size_t block, int task) {
  const double sigma = std::sqrt(signal_variance(spec));
  const auto* icm = std::get_if<IcmKernelParams>(&spec);
  if (!icm) return sigma;
  if (block == icm->kappa.size()) return sigma * icm->v[static_cast<std::size_t>(task)];
  return static_cast<int>(block) == task ? sigma * std::sqrt(icm->kappa[block]) : 0.0;
}

}  // namespace

Eigen::Index FeatureMap::width_for(std::span<const TaskedInput> inputs, const KernelSpec& spec) {
  Eigen::Index w = 0;
  for (const auto& b : collect_blocks(inputs, spec)) w += static_cast<Eigen::Index>(b.size());
  return w;
}

FeatureMap::FeatureMap(std::span<const TaskedInput> inputs, const KernelSpec& spec)
    : spec_(spec), block_features_(collect_blocks(inputs, spec)) {
  Eigen::Index offset = 0;
  for (const auto& b : block_features_) {
    block_offset_.push_back(offset);
    offset += static_cast<Eigen::Index>(b.size());
  }
  width_ = offset;
  rows_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(inputs.size()), offset);
  for (std::size_t i = 0; i < inputs.size(); ++i) rows_.row(static_cast<Eigen::Index>(i)) = map(inputs[i]).transpose();
}

Eigen::VectorXd FeatureMap::map(const TaskedInput& test) const {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(width_);
  const bool icm = is_icm(spec_);
  if (icm) check_task(test.task_id, task_count(spec_));
  for (std::size_t block = 0; block < block_features_.size(); ++block) {
    // Task blocks other than the test point's own are zero.
    if (icm && block + 1 < block_features_.size() && static_cast<int>(block) != test.task_id) continue;
    const double scale = block_scale(spec_, block, test.task_id);
    const auto& ids = block_features_[block];
    for (const auto& e : test.features.entries()) {
      auto it = std::lower_bound(ids.begin(), ids.end(), e.index);
      if (it != ids.end() && *it == e.index) {
        phi(block_offset_[block] + (it - ids.begin())) = scale * e.count;
      }
    }
  }
  return phi;
}

std::size_t parameter_count(const KernelSpec& spec) {
  return is_icm(spec) ? 1 + 2 * static_cast<std::size_t>(task_count(spec)) : 1;
}

std::vector<std::string> parameter_names(const KernelSpec& spec) {
  std::vector<std::string> names{"log_signal_variance"};
  if (is_icm(spec)) {
    const int d = task_count(spec);
    for (int t = 0; t < d; ++t) names.push_back("log_kappa[" + std::to_string(t) + "]");
    for (int t = 0; t < d; ++t) names.push_back("v[" + std::to_string(t) + "]");
  }
  return names;
}

Eigen::VectorXd to_unconstrained(const KernelSpec& spec) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parameter_count(spec)));
  theta(0) = std::log(signal_variance(spec));
  if (const auto* icm = std::get_if<IcmKernelParams>(&spec)) {
    const int d = icm->task_count();
    for (int t = 0; t < d; ++t) {
      // kappa = 0 has no log image; start just inside the feasible region.
      theta(1 + t) = std::log(std::max(icm->kappa[t], 1e-12));
      theta(1 + d + t) = icm->v[t];
    }
  }
  return theta;
}

KernelSpec from_unconstrained(const KernelSpec& like, const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count(like)) {
    throw ConfigError("hyperparameter vector has the wrong length");
  }
  if (!is_icm(like)) return LinearKernelParams{std::exp(theta(0))};
  const int d = task_count(like);
  IcmKernelParams p;
  p.data_kernel.signal_variance = std::exp(theta(0));
  p.kappa.resize(d);
  p.v.resize(d);
  for (int t = 0; t < d; ++t) {
    p.kappa[t] = std::exp(theta(1 + t));
    p.v[t] = theta(1 + d + t);
  }
  return p;
}

Eigen::MatrixXd task_weighted_sums(std::span<const TaskedInput> inputs, const KernelSpec& spec,
                                   const Eigen::MatrixXd& weighted_data_gram) {
  const int d = task_count(spec);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, d);
  if (!is_icm(spec)) {
    sums(0, 0) = weighted_data_gram.sum();
    return sums;
  }
  const auto n = static_cast<Eigen::Index>(inputs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ti = inputs[i].task_id;
    for (Eigen::Index j = 0; j < n; ++j) sums(ti, inputs[j].task_id) += weighted_data_gram(i, j);
  }
  return sums;
}

Eigen::VectorXd contract_gram_derivatives(const KernelSpec& spec, const Eigen::MatrixXd& s) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count(spec)));
  const double s2 = signal_variance(spec);
  const Eigen::MatrixXd b = coregionalisation_matrix(spec);
  grad(0) = s2 * s.cwiseProduct(b).sum();
  if (const auto* icm = std::get_if<IcmKernelParams>(&spec)) {
    const int d = icm->task_count();
    const Eigen::Map<const Eigen::VectorXd> v(icm->v.data(), d);
    for (int t = 0; t < d; ++t) {
      grad(1 + t) = s2 * icm->kappa[t] * s(t, t);
      grad(1 + d + t) = s2 * (s.row(t).dot(v) + s.col(t).dot(v));
    }
  }
  return grad;
}

}  // namespace stancekit
