#include <random>

#include <gtest/gtest.h>

#include "stancekit/errors.hpp"
#include "stancekit/kernels.hpp"
#include "test_support.hpp"

namespace stancekit {
namespace {

using testing::random_icm;
using testing::random_sparse;

TaskedInput at(SparseFeatureVector x, int task = 0) { return {std::move(x), task}; }

TEST(LinearKernel, UnitVectorWithUnitVariance) {
  const auto e1 = SparseFeatureVector::from_dense({1});
  EXPECT_EQ(linear_kernel(e1, e1, {1.0}), 1.0);
}

TEST(LinearKernel, ScaledDotProduct) {
  EXPECT_EQ(linear_kernel(SparseFeatureVector::from_dense({1, 2}), SparseFeatureVector::from_dense({3, 4}), {2.0}), 22.0);
}

TEST(LinearKernel, OrthogonalInputsGiveZero) {
  EXPECT_EQ(linear_kernel(SparseFeatureVector::from_dense({1, 0}), SparseFeatureVector::from_dense({0, 1}), {5.0}), 0.0);
}

TEST(IcmKernel, IdentityCoregionalisationIsBlockDiagonal) {
  const auto spec = std::get<IcmKernelParams>(make_icm_kernel(1.0, {1, 1}, {0, 0}));
  const auto x = SparseFeatureVector::from_dense({1, 2});
  const auto y = SparseFeatureVector::from_dense({2, 1});
  EXPECT_EQ(icm_kernel(at(x, 0), at(y, 0), spec), 4.0);
  EXPECT_EQ(icm_kernel(at(x, 1), at(y, 1), spec), 4.0);
  EXPECT_EQ(icm_kernel(at(x, 0), at(y, 1), spec), 0.0);
}

TEST(IcmKernel, AllOnesCoregionalisationMatchesDataKernel) {
  const auto spec = std::get<IcmKernelParams>(make_icm_kernel(1.5, {0, 0}, {1, 1}));
  const auto x = SparseFeatureVector::from_dense({1, 2});
  const auto y = SparseFeatureVector::from_dense({2, 1});
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) EXPECT_EQ(icm_kernel(at(x, a), at(y, b), spec), linear_kernel(x, y, {1.5}));
  }
}

TEST(IcmKernel, DirectEvaluation) {
  const auto spec = std::get<IcmKernelParams>(make_icm_kernel(3.0, {1, 2}, {1, -1}));
  const auto e = SparseFeatureVector::from_dense({1});
  EXPECT_EQ(icm_kernel(at(e, 0), at(e, 1), spec), -3.0);
}

TEST(IcmKernel, TaskOutOfRangeIsConfigError) {
  const auto spec = std::get<IcmKernelParams>(make_icm_kernel(1.0, {1, 1}, {0, 0}));
  const auto e = SparseFeatureVector::from_dense({1});
  EXPECT_THROW(icm_kernel(at(e, 0), at(e, 2), spec), ConfigError);
  EXPECT_THROW(icm_kernel(at(e, -1), at(e, 0), spec), ConfigError);
}

TEST(KernelSpec, ValidationRejectsBadParameters) {
  EXPECT_THROW(make_linear_kernel(0.0), ConfigError);
  EXPECT_THROW(make_icm_kernel(1.0, {1.0, -0.1}, {0, 0}), ConfigError);
  EXPECT_THROW(make_icm_kernel(1.0, {1.0}, {0, 0}), ConfigError);
  EXPECT_THROW(make_icm_kernel(1.0, {}, {}), ConfigError);
}

TEST(GramMatrix, SingleInput) {
  const std::vector<TaskedInput> in{at(SparseFeatureVector::from_dense({1}))};
  const Eigen::MatrixXd k = gram_matrix(in, make_linear_kernel(1.0), 0.0);
  ASSERT_EQ(k.rows(), 1);
  EXPECT_EQ(k(0, 0), 1.0);
}

TEST(GramMatrix, JitterOnlyOnDiagonal) {
  const auto x = SparseFeatureVector::from_dense({2, 1});
  const std::vector<TaskedInput> in{at(x), at(x)};
  const Eigen::MatrixXd k = gram_matrix(in, make_linear_kernel(1.0), 1e-8);
  EXPECT_EQ(k(0, 1), k(0, 0) - 1e-8);
  EXPECT_EQ(k(1, 0), k(0, 1));
}

TEST(GramMatrix, LinearFamilyIgnoresTaskIds) {
  const auto x = SparseFeatureVector::from_dense({2, 1});
  const std::vector<TaskedInput> in{at(x, 0), at(x, 5)};
  EXPECT_EQ(gram_matrix(in, make_linear_kernel(1.0), 0.0)(0, 1), 5.0);
}

TEST(GramMatrix, RandomTenInputsArePsd) {
  std::mt19937_64 rng(11);
  std::vector<TaskedInput> in;
  for (int i = 0; i < 10; ++i) in.push_back(at(random_sparse(rng, 8, 3, 0.4), i % 3));
  const Eigen::MatrixXd k = gram_matrix(in, random_icm(rng, 3), 0.0);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff(), -1e-8);
}

class KernelProperties : public ::testing::TestWithParam<int> {};

TEST_P(KernelProperties, SymmetryPsdAndHomogeneity) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  const int tasks = 1 + GetParam() % 4;
  std::vector<TaskedInput> in;
  for (int i = 0; i < 12; ++i) in.push_back(at(random_sparse(rng, 15, 4, 0.3), i % tasks));
  const KernelSpec spec = random_icm(rng, tasks);
  for (const auto& a : in) {
    for (const auto& b : in) EXPECT_EQ(evaluate(spec, a, b), evaluate(spec, b, a));
  }
  const Eigen::MatrixXd k = gram_matrix(in, spec, 0.0);
  EXPECT_LE((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff(), -1e-8);

  const Eigen::MatrixXd b = coregionalisation_matrix(spec);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(b).eigenvalues().minCoeff(), -1e-12);

  auto scaled = std::get<IcmKernelParams>(spec);
  scaled.data_kernel.signal_variance *= 3.0;
  EXPECT_TRUE(gram_matrix(in, scaled, 0.0).isApprox(3.0 * k, 1e-14));
}

INSTANTIATE_TEST_SUITE_P(Seeds, KernelProperties, ::testing::Range(0, 25));

TEST(IcmKernel, IdentityBReducesToLinearWithinTask) {
  std::mt19937_64 rng(3);
  const KernelSpec icm = make_icm_kernel(0.7, {1, 1, 1}, {0, 0, 0});
  for (int i = 0; i < 50; ++i) {
    const TaskedInput a = at(random_sparse(rng, 6, 2, 0.5), static_cast<int>(rng() % 3));
    const TaskedInput b = at(random_sparse(rng, 6, 2, 0.5), static_cast<int>(rng() % 3));
    const double expected = a.task_id == b.task_id ? linear_kernel(a.features, b.features, {0.7}) : 0.0;
    EXPECT_EQ(evaluate(icm, a, b), expected);
  }
}

TEST(Unconstrained, RoundTrip) {
  const KernelSpec spec = make_icm_kernel(2.5, {0.5, 3.0}, {-0.25, 1.0});
  const Eigen::VectorXd theta = to_unconstrained(spec);
  ASSERT_EQ(theta.size(), 5);
  EXPECT_EQ(parameter_names(spec).size(), 5u);
  const auto back = std::get<IcmKernelParams>(from_unconstrained(spec, theta));
  EXPECT_NEAR(back.data_kernel.signal_variance, 2.5, 1e-14);
  EXPECT_NEAR(back.kappa[1], 3.0, 1e-14);
  EXPECT_EQ(back.v[0], -0.25);
  EXPECT_EQ(parameter_count(make_linear_kernel(1.0)), 1u);
}

TEST(FeatureMap, ReproducesGramMatrix) {
  std::mt19937_64 rng(5);
  for (int tasks : {1, 2, 4}) {
    std::vector<TaskedInput> in;
    for (int i = 0; i < 20; ++i) in.push_back(at(random_sparse(rng, 10, 3, 0.3), i % tasks));
    for (const KernelSpec& spec : {make_linear_kernel(1.7), random_icm(rng, tasks)}) {
      const FeatureMap map(in, spec);
      EXPECT_EQ(map.width(), FeatureMap::width_for(in, spec));
      const Eigen::MatrixXd& phi = map.training_rows();
      EXPECT_LE((phi * phi.transpose() - gram_matrix(in, spec, 0.0)).cwiseAbs().maxCoeff(), 1e-12);
      const TaskedInput test = at(random_sparse(rng, 12, 3, 0.5), 0);
      EXPECT_LE((phi * map.map(test) - cross_covariance(in, spec, test)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

}  // namespace
}  // namespace stancekit
