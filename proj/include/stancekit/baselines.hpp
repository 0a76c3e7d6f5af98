#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stancekit/multiclass.hpp"

namespace stancekit {

// Most frequent training label; ties go by stance precedence.
Stance majority_label(std::span<const StanceExample> train);

std::vector<Stance> run_baseline_majority(std::span<const StanceExample> train, std::size_t test_count);

// One-vs-rest L2-regularized logistic regression. Each class minimizes
//   sum_i log(1 + exp(-y_i (w.x_i + b))) + l2/2 |w|^2
// (intercept unpenalized) by L-BFGS. With fewer than two training classes
// it predicts the majority label.
class LogisticRegression {
 public:
  static LogisticRegression fit(std::span<const StanceExample> train, double l2_strength);

  std::array<double, kStanceCount> scores(const SparseFeatureVector& x) const;
  Stance predict(const SparseFeatureVector& x) const;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& intercepts() const { return intercepts_; }

 private:
  Eigen::MatrixXd weights_;  // dims x 3
  Eigen::VectorXd intercepts_;
  bool constant_ = false;
  Stance fallback_ = Stance::supporting;
};

// Multinomial naive Bayes with additive smoothing over the training
// feature set; features unseen in training are ignored at prediction time.
class NaiveBayes {
 public:
  static NaiveBayes fit(std::span<const StanceExample> train, double alpha);

  std::array<double, kStanceCount> log_posteriors(const SparseFeatureVector& x) const;
  Stance predict(const SparseFeatureVector& x) const;

 private:
  std::array<double, kStanceCount> log_prior_{};
  // feature index -> per-class log likelihood; absent = unseen feature
  std::vector<std::array<double, kStanceCount>> log_likelihood_;
  std::vector<bool> seen_;
};

std::vector<Stance> run_baseline_logreg(std::span<const StanceExample> train,
                                        std::span<const SparseFeatureVector> test, double l2_strength);
std::vector<Stance> run_baseline_nb(std::span<const StanceExample> train, std::span<const SparseFeatureVector> test,
                                    double smoothing_alpha);

}  // namespace stancekit
