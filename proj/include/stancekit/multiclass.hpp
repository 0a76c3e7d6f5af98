#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stancekit/gp_inference.hpp"
#include "stancekit/stance.hpp"

namespace stancekit {

enum class MethodVariant { gp, gp_pooled, gp_icm };

std::string_view to_string(MethodVariant m);
std::optional<MethodVariant> parse_method_variant(std::string_view text);

// A featurized, labelled training tweet. `task_key` names the unit whose
// tweets share an ICM task (the rumour, or the event in event mode).
struct StanceExample {
  SparseFeatureVector features;
  std::string task_key;
  Stance label = Stance::supporting;
};

struct TrainingConfig {
  FitConfig fit;
  OptimizerOptions optimizer;
  // Starting point of restart 0. v starts away from 0, where its gradient
  // vanishes by symmetry.
  double initial_signal_variance = 1.0;
  double initial_kappa = 1.0;
  double initial_v = 0.5;
  // Keep kernel hyperparameters at their initial values.
  bool optimize = true;
};

// One fitted one-vs-all problem: +1 for the class, -1 for the rest.
struct BinaryClassifier {
  BinaryDataset data;
  KernelSpec kernel;
  EpState state;
  double log_evidence = 0.0;
  std::vector<std::string> warnings;
};

struct StancePrediction {
  Stance label = Stance::supporting;
  // Raw one-vs-all probabilities indexed by Stance; not renormalized.
  std::array<double, kStanceCount> probabilities{};
  int clamped_variances = 0;
};

class StanceModel {
 public:
  StanceModel(MethodVariant variant, std::vector<std::string> task_keys, int target_task,
              std::array<BinaryClassifier, kStanceCount> per_class, FitConfig fit);

  MethodVariant variant() const { return variant_; }
  // Task id i belongs to task_keys()[i]; pooled variants have one task.
  const std::vector<std::string>& task_keys() const { return task_keys_; }
  int target_task() const { return target_task_; }
  const FitConfig& fit_config() const { return fit_; }
  const BinaryClassifier& classifier(Stance s) const { return per_class_[index_of(s)]; }

  // Unknown keys map to the target task under GPICM; pooled variants
  // always use task 0.
  int task_for(std::string_view task_key) const;

  StancePrediction predict(const SparseFeatureVector& features, std::string_view task_key) const;

 private:
  MethodVariant variant_;
  std::vector<std::string> task_keys_;
  int target_task_;
  std::array<BinaryClassifier, kStanceCount> per_class_;
  FitConfig fit_;
};

// Trains three one-vs-all binary GP classifiers with per-problem evidence
// maximization. GP keeps only target tweets; GPPooled pools everything
// under a single-task linear kernel; GPICM gives every distinct task key
// its own ICM task (sorted by key). `target` names the target unit. GP
// throws ConfigError when it has no target tweets, and so does GPICM when
// the target is missing from `train`. Without a target, GPICM picks the
// task key with the most tweets (ties: smallest key).
StanceModel train_stance_model(std::span<const StanceExample> train, MethodVariant variant,
                               const std::optional<std::string>& target, const TrainingConfig& cfg);

}  // namespace stancekit
