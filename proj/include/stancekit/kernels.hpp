#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "stancekit/sparse_vector.hpp"

namespace stancekit {

// k(x, x') = signal_variance * x.x'
struct LinearKernelParams {
  double signal_variance = 1.0;
};

// Intrinsic coregionalisation: k((x,d),(x',d')) = k_data(x,x') * B[d][d'],
// with B = diag(kappa) + v v^T.
struct IcmKernelParams {
  LinearKernelParams data_kernel;
  std::vector<double> kappa;
  std::vector<double> v;

  int task_count() const { return static_cast<int>(kappa.size()); }
};

using KernelSpec = std::variant<LinearKernelParams, IcmKernelParams>;

struct TaskedInput {
  SparseFeatureVector features;
  int task_id = 0;
};

KernelSpec make_linear_kernel(double signal_variance);
KernelSpec make_icm_kernel(double signal_variance, std::vector<double> kappa, std::vector<double> v);

// Throws ConfigError if the invariants (sigma^2 > 0, kappa >= 0, matching
// lengths) do not hold.
void validate(const KernelSpec& spec);

int task_count(const KernelSpec& spec);
double signal_variance(const KernelSpec& spec);
bool is_icm(const KernelSpec& spec);

// D x D task covariance; the 1 x 1 matrix [1] for the plain linear kernel.
Eigen::MatrixXd coregionalisation_matrix(const KernelSpec& spec);

double linear_kernel(const SparseFeatureVector& a, const SparseFeatureVector& b, const LinearKernelParams& p);

// Throws ConfigError when either task id is outside [0, task_count).
double icm_kernel(const TaskedInput& a, const TaskedInput& b, const IcmKernelParams& p);

// Dispatches on the kernel family; the linear family ignores task ids.
double evaluate(const KernelSpec& spec, const TaskedInput& a, const TaskedInput& b);

// Gram matrix with `jitter` added to the diagonal. Rows are filled in input
// order and mirrored, so the result is exactly symmetric.
Eigen::MatrixXd gram_matrix(std::span<const TaskedInput> inputs, const KernelSpec& spec, double jitter);

// Plain feature dot products x_i.x_j (no sigma^2, no B, no jitter).
Eigen::MatrixXd data_gram(std::span<const TaskedInput> inputs);

// Cross-covariances k(inputs[i], test) for every training input.
Eigen::VectorXd cross_covariance(std::span<const TaskedInput> inputs, const KernelSpec& spec,
                                 const TaskedInput& test);

// Explicit finite feature map phi with phi(a).phi(b) = k(a, b) for every
// training input. Columns are grouped in blocks of feature ids: one block
// for the linear kernel; for ICM one block per task (scaled by
// sigma sqrt(kappa_t)) plus a shared block (scaled by sigma v_t). Only
// feature ids that occur in the training inputs get a column.
class FeatureMap {
 public:
  FeatureMap(std::span<const TaskedInput> inputs, const KernelSpec& spec);

  // Number of columns, computed without building the map.
  static Eigen::Index width_for(std::span<const TaskedInput> inputs, const KernelSpec& spec);

  Eigen::Index width() const { return width_; }
  const Eigen::MatrixXd& training_rows() const { return rows_; }

  // phi(test) restricted to the training columns. The remaining prior
  // variance of the test point, k(test,test) - |phi(test)|^2, belongs to
  // weights no training input touches.
  Eigen::VectorXd map(const TaskedInput& test) const;

 private:
  KernelSpec spec_;
  std::vector<std::vector<std::int32_t>> block_features_;
  std::vector<Eigen::Index> block_offset_;
  Eigen::Index width_ = 0;
  Eigen::MatrixXd rows_;
};

// ---- unconstrained hyperparameter coordinates ---------------------------
//
// Linear: [log sigma^2]. ICM: [log sigma^2, log kappa_0..D-1, v_0..D-1].

std::size_t parameter_count(const KernelSpec& spec);
std::vector<std::string> parameter_names(const KernelSpec& spec);
Eigen::VectorXd to_unconstrained(const KernelSpec& spec);
// `like` fixes the family and the task count.
KernelSpec from_unconstrained(const KernelSpec& like, const Eigen::VectorXd& theta);

// Given W[a][b] = sum over pairs (i in task a, j in task b) of
// weights_ij * x_i.x_j, returns sum_ij weights_ij * dK_ij/dtheta for every
// unconstrained coordinate theta.
Eigen::VectorXd contract_gram_derivatives(const KernelSpec& spec, const Eigen::MatrixXd& task_weighted_sums);

// Folds an N x N elementwise product (weights o data_gram) into the D x D
// task-pair sums expected above. The linear family has a single task.
Eigen::MatrixXd task_weighted_sums(std::span<const TaskedInput> inputs, const KernelSpec& spec,
                                   const Eigen::MatrixXd& weighted_data_gram);

}  // namespace stancekit
