#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stancekit/gp_inference.hpp"
#include "stancekit/kernels.hpp"

namespace stancekit::testing {

// Gauss-Hermite rule for expectations under N(0, 1) (Golub-Welsch).
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline HermiteRule hermite_rule(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  HermiteRule rule;
  for (int i = 0; i < n; ++i) {
    rule.nodes.push_back(eig.eigenvalues()(i));
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights.push_back(v0 * v0);
  }
  return rule;
}

// E[g(f)] for f ~ N(0, cov) with a possibly singular cov, by a tensor
// Gauss-Hermite grid over the non-null eigen-directions.
inline double gaussian_expectation(const Eigen::MatrixXd& cov, int nodes_per_dim,
                                   const std::function<double(const Eigen::VectorXd&)>& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double cutoff = 1e-10 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Eigen::VectorXd> axes;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    if (eig.eigenvalues()(i) > cutoff) axes.push_back(eig.eigenvectors().col(i) * std::sqrt(eig.eigenvalues()(i)));
  }
  const HermiteRule rule = hermite_rule(nodes_per_dim);
  const std::size_t dims = axes.size();
  std::vector<int> idx(dims, 0);
  double total = 0.0;
  while (true) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(cov.rows());
    double w = 1.0;
    for (std::size_t d = 0; d < dims; ++d) {
      f += rule.nodes[static_cast<std::size_t>(idx[d])] * axes[d];
      w *= rule.weights[static_cast<std::size_t>(idx[d])];
    }
    total += w * g(f);
    std::size_t d = 0;
    while (d < dims && ++idx[d] == nodes_per_dim) idx[d++] = 0;
    if (d == dims) break;
  }
  return total;
}

// p(y* = +1 | y) under the exact probit-GP posterior, by quadrature over the
// joint prior of the training latents and the test latent.
inline double exact_predictive(const BinaryDataset& data, const KernelSpec& kernel, const TaskedInput& test,
                               int nodes_per_dim) {
  std::vector<TaskedInput> all = data.inputs;
  all.push_back(test);
  const Eigen::MatrixXd cov = gram_matrix(all, kernel, 0.0);
  const auto n = static_cast<Eigen::Index>(data.size());
  const double evidence = gaussian_expectation(cov, nodes_per_dim, [&](const Eigen::VectorXd& f) {
    double like = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) like *= probit(data.labels[static_cast<std::size_t>(i)] * f(i));
    return like;
  });
  const double joint = gaussian_expectation(cov, nodes_per_dim, [&](const Eigen::VectorXd& f) {
    double like = probit(f(n));
    for (Eigen::Index i = 0; i < n; ++i) like *= probit(data.labels[static_cast<std::size_t>(i)] * f(i));
    return like;
  });
  return joint / evidence;
}

inline SparseFeatureVector random_sparse(std::mt19937_64& rng, int dims, int max_count, double density) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, max_count);
  std::vector<std::int32_t> ids;
  for (int d = 0; d < dims; ++d) {
    if (unit(rng) < density) {
      for (int c = count(rng); c > 0; --c) ids.push_back(d);
    }
  }
  return SparseFeatureVector::from_indices(ids);
}

// Small binary problem with features in [0, dims) and labels from a random
// linear rule, guaranteed to contain both labels.
inline BinaryDataset random_binary(std::mt19937_64& rng, int n, int dims, int tasks) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> task(0, tasks - 1);
  Eigen::VectorXd w(dims);
  for (int d = 0; d < dims; ++d) w(d) = normal(rng);
  BinaryDataset data;
  while (true) {
    data.inputs.clear();
    data.labels.clear();
    for (int i = 0; i < n; ++i) {
      SparseFeatureVector x = random_sparse(rng, dims, 3, 0.7);
      double score = 0.0;
      for (const auto& e : x.entries()) score += w(e.index) * e.count;
      data.inputs.push_back({x, i < tasks ? i : task(rng)});
      data.labels.push_back(score + 0.3 * normal(rng) >= 0.0 ? 1 : -1);
    }
    if (data.has_both_labels()) return data;
  }
}

inline KernelSpec random_icm(std::mt19937_64& rng, int tasks) {
  std::uniform_real_distribution<double> kappa(0.0, 2.0), v(-1.5, 1.5), sigma(0.3, 2.0);
  std::vector<double> k(static_cast<std::size_t>(tasks)), vv(static_cast<std::size_t>(tasks));
  for (int t = 0; t < tasks; ++t) {
    k[static_cast<std::size_t>(t)] = kappa(rng);
    vv[static_cast<std::size_t>(t)] = v(rng);
  }
  return make_icm_kernel(sigma(rng), k, vv);
}

}  // namespace stancekit::testing
