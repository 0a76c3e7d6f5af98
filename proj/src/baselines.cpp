#include "stancekit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stancekit/errors.hpp"
#include "stancekit/optimize.hpp"

namespace stancekit {
namespace {

std::int32_t dimension(std::span<const StanceExample> train) {
  std::int32_t dims = 0;
  for (const auto& ex : train) {
    for (const auto& e : ex.features.entries()) dims = std::max(dims, e.index + 1);
  }
  return dims;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double linear_score(const Eigen::VectorXd& w, double b, const SparseFeatureVector& x) {
  double s = b;
  for (const auto& e : x.entries()) {
    if (e.index < w.size()) s += w(e.index) * e.count;
  }
  return s;
}

}  // namespace

Stance majority_label(std::span<const StanceExample> train) {
  if (train.empty()) throw ConfigError("majority baseline needs training data");
  std::array<std::size_t, kStanceCount> counts{};
  for (const auto& ex : train) ++counts[index_of(ex.label)];
  return argmax_stance(counts);
}

std::vector<Stance> run_baseline_majority(std::span<const StanceExample> train, std::size_t test_count) {
  return std::vector<Stance>(test_count, majority_label(train));
}

LogisticRegression LogisticRegression::fit(std::span<const StanceExample> train, double l2_strength) {
  if (!(l2_strength > 0.0)) throw ConfigError("l2_strength must be positive");
  LogisticRegression model;
  model.fallback_ = majority_label(train);
  std::array<bool, kStanceCount> present{};
  for (const auto& ex : train) present[index_of(ex.label)] = true;
  if (std::count(present.begin(), present.end(), true) < 2) {
    model.constant_ = true;
    return model;
  }
  const std::int32_t dims = dimension(train);
  model.weights_ = Eigen::MatrixXd::Zero(dims, kStanceCount);
  model.intercepts_ = Eigen::VectorXd::Zero(kStanceCount);

  LbfgsOptions opt;
  opt.max_iters = 1000;
  opt.gradient_tolerance = 1e-9;
  opt.value_tolerance = 1e-14;
  opt.max_step = 1e6;
  for (Stance cls : kAllStances) {
    // x = [w; b]
    const Objective objective = [&](const Eigen::VectorXd& x) -> std::optional<ObjectiveValue> {
      const Eigen::VectorXd w = x.head(dims);
      const double b = x(dims);
      ObjectiveValue out;
      out.value = -0.5 * l2_strength * w.squaredNorm();
      out.gradient = Eigen::VectorXd::Zero(dims + 1);
      out.gradient.head(dims) = -l2_strength * w;
      for (const auto& ex : train) {
        const double y = ex.label == cls ? 1.0 : -1.0;
        const double z = y * linear_score(w, b, ex.features);
        out.value -= softplus(-z);
        const double g = y * sigmoid(-z);
        for (const auto& e : ex.features.entries()) out.gradient(e.index) += g * e.count;
        out.gradient(dims) += g;
      }
      return out;
    };
    const LbfgsResult r = maximize_lbfgs(objective, Eigen::VectorXd::Zero(dims + 1), opt);
    model.weights_.col(static_cast<Eigen::Index>(index_of(cls))) = r.x.head(dims);
    model.intercepts_(static_cast<Eigen::Index>(index_of(cls))) = r.x(dims);
  }
  return model;
}

std::array<double, kStanceCount> LogisticRegression::scores(const SparseFeatureVector& x) const {
  std::array<double, kStanceCount> out{};
  if (constant_) {
    out[index_of(fallback_)] = 1.0;
    return out;
  }
  for (std::size_t k = 0; k < kStanceCount; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    out[k] = sigmoid(linear_score(weights_.col(col), intercepts_(col), x));
  }
  return out;
}

Stance LogisticRegression::predict(const SparseFeatureVector& x) const { return argmax_stance(scores(x)); }

NaiveBayes NaiveBayes::fit(std::span<const StanceExample> train, double alpha) {
  if (train.empty()) throw ConfigError("naive Bayes needs training data");
  if (!(alpha > 0.0)) throw ConfigError("smoothing alpha must be positive");
  NaiveBayes model;
  const std::int32_t dims = dimension(train);
  std::vector<std::array<double, kStanceCount>> counts(static_cast<std::size_t>(dims));
  model.seen_.assign(static_cast<std::size_t>(dims), false);
  std::array<double, kStanceCount> totals{}, docs{};
  for (const auto& ex : train) {
    const std::size_t k = index_of(ex.label);
    docs[k] += 1.0;
    for (const auto& e : ex.features.entries()) {
      counts[static_cast<std::size_t>(e.index)][k] += e.count;
      totals[k] += e.count;
      model.seen_[static_cast<std::size_t>(e.index)] = true;
    }
  }
  const double vocab = static_cast<double>(std::count(model.seen_.begin(), model.seen_.end(), true));
  for (std::size_t k = 0; k < kStanceCount; ++k) {
    model.log_prior_[k] = docs[k] > 0 ? std::log(docs[k] / static_cast<double>(train.size()))
                                      : -std::numeric_limits<double>::infinity();
  }
  model.log_likelihood_.resize(static_cast<std::size_t>(dims));
  for (std::size_t f = 0; f < counts.size(); ++f) {
    for (std::size_t k = 0; k < kStanceCount; ++k) {
      model.log_likelihood_[f][k] = std::log((counts[f][k] + alpha) / (totals[k] + alpha * vocab));
    }
  }
  return model;
}

std::array<double, kStanceCount> NaiveBayes::log_posteriors(const SparseFeatureVector& x) const {
  std::array<double, kStanceCount> out = log_prior_;
  for (const auto& e : x.entries()) {
    const auto f = static_cast<std::size_t>(e.index);
    if (f >= seen_.size() || !seen_[f]) continue;
    for (std::size_t k = 0; k < kStanceCount; ++k) out[k] += e.count * log_likelihood_[f][k];
  }
  return out;
}

Stance NaiveBayes::predict(const SparseFeatureVector& x) const { return argmax_stance(log_posteriors(x)); }

std::vector<Stance> run_baseline_logreg(std::span<const StanceExample> train,
                                        std::span<const SparseFeatureVector> test, double l2_strength) {
  const LogisticRegression model = LogisticRegression::fit(train, l2_strength);
  std::vector<Stance> out;
  for (const auto& x : test) out.push_back(model.predict(x));
  return out;
}

std::vector<Stance> run_baseline_nb(std::span<const StanceExample> train, std::span<const SparseFeatureVector> test,
                                    double smoothing_alpha) {
  const NaiveBayes model = NaiveBayes::fit(train, smoothing_alpha);
  std::vector<Stance> out;
  for (const auto& x : test) out.push_back(model.predict(x));
  return out;
}

}  // namespace stancekit
