#include "stancekit/multiclass.hpp"

#include <algorithm>
#include <map>

#include "stancekit/errors.hpp"

namespace stancekit {
namespace {

KernelSpec initial_kernel(MethodVariant variant, int tasks, const TrainingConfig& cfg) {
  if (variant != MethodVariant::gp_icm) return make_linear_kernel(cfg.initial_signal_variance);
  const auto d = static_cast<std::size_t>(tasks);
  return make_icm_kernel(cfg.initial_signal_variance, std::vector<double>(d, cfg.initial_kappa),
                         std::vector<double>(d, cfg.initial_v));
}

BinaryClassifier fit_one_vs_all(const std::vector<TaskedInput>& inputs, const std::vector<Stance>& labels, Stance cls,
                                const KernelSpec& init, const TrainingConfig& cfg, std::uint64_t seed) {
  BinaryClassifier out;
  out.data.inputs = inputs;
  for (Stance s : labels) out.data.labels.push_back(s == cls ? 1 : -1);
  if (!out.data.has_both_labels() || !cfg.optimize) {
    out.kernel = init;
    if (!out.data.has_both_labels()) {
      // Nothing to separate: stay at the prior scale.
      if (auto* icm = std::get_if<IcmKernelParams>(&out.kernel)) {
        icm->data_kernel.signal_variance = 1.0;
      } else {
        out.kernel = make_linear_kernel(1.0);
      }
      out.warnings.push_back(std::string("one-vs-all problem for '") + std::string(to_string(cls)) +
                             "' has a single class; hyperparameter search skipped");
    }
    out.state = ep_fit(out.data, out.kernel, cfg.fit);
    out.log_evidence = out.state.log_evidence;
    return out;
  }
  OptimizerOptions opt = cfg.optimizer;
  opt.seed = seed;
  HyperparameterFit fit = optimize_hyperparameters(out.data, init, cfg.fit, opt);
  out.kernel = std::move(fit.kernel);
  out.state = std::move(fit.state);
  out.log_evidence = fit.log_evidence;
  for (auto& w : fit.warnings) out.warnings.push_back(std::string(to_string(cls)) + ": " + w);
  return out;
}

}  // namespace

std::string_view to_string(MethodVariant m) {
  switch (m) {
    case MethodVariant::gp:
      return "GP";
    case MethodVariant::gp_pooled:
      return "GPPooled";
    case MethodVariant::gp_icm:
      return "GPICM";
  }
  return "?";
}

std::optional<MethodVariant> parse_method_variant(std::string_view text) {
  for (MethodVariant m : {MethodVariant::gp, MethodVariant::gp_pooled, MethodVariant::gp_icm}) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

StanceModel::StanceModel(MethodVariant variant, std::vector<std::string> task_keys, int target_task,
                         std::array<BinaryClassifier, kStanceCount> per_class, FitConfig fit)
    : variant_(variant),
      task_keys_(std::move(task_keys)),
      target_task_(target_task),
      per_class_(std::move(per_class)),
      fit_(fit) {
  if (task_keys_.empty()) throw ConfigError("stance model needs at least one task");
  if (target_task_ < 0 || target_task_ >= static_cast<int>(task_keys_.size())) {
    throw ConfigError("target task outside the task table");
  }
  if (variant_ != MethodVariant::gp_icm && task_keys_.size() != 1) {
    throw ConfigError("pooled and target-only models have exactly one task");
  }
}

int StanceModel::task_for(std::string_view task_key) const {
  if (variant_ != MethodVariant::gp_icm) return 0;
  const auto it = std::lower_bound(task_keys_.begin(), task_keys_.end(), task_key);
  if (it != task_keys_.end() && *it == task_key) return static_cast<int>(it - task_keys_.begin());
  return target_task_;
}

StancePrediction StanceModel::predict(const SparseFeatureVector& features, std::string_view task_key) const {
  const TaskedInput input{features, task_for(task_key)};
  StancePrediction out;
  for (Stance s : kAllStances) {
    const BinaryClassifier& c = per_class_[index_of(s)];
    out.probabilities[index_of(s)] =
        predict_probability(c.state, c.data, c.kernel, input, fit_.jitter, &out.clamped_variances);
  }
  out.label = argmax_stance(out.probabilities);
  return out;
}

StanceModel train_stance_model(std::span<const StanceExample> train, MethodVariant variant,
                               const std::optional<std::string>& target, const TrainingConfig& cfg) {
  if (train.empty()) throw ConfigError("cannot train a stance model on an empty training set");

  std::map<std::string, std::size_t> counts;
  for (const auto& ex : train) ++counts[ex.task_key];
  const bool target_seen = target && counts.contains(*target);

  std::vector<std::string> task_keys;
  int target_task = 0;
  std::vector<const StanceExample*> kept;
  switch (variant) {
    case MethodVariant::gp:
      if (!target_seen) {
        throw ConfigError(
            "GP variant needs target-rumour training tweets; it is undefined in the leave-one-out setting "
            "(use leave-part-out with k >= 1)");
      }
      task_keys = {*target};
      for (const auto& ex : train) {
        if (ex.task_key == *target) kept.push_back(&ex);
      }
      break;
    case MethodVariant::gp_pooled:
      task_keys = {target.value_or("pooled")};
      for (const auto& ex : train) kept.push_back(&ex);
      break;
    case MethodVariant::gp_icm: {
      if (target && !target_seen) {
        throw ConfigError("GPICM needs target training tweets; the leave-one-out setting should use GPPooled");
      }
      std::string chosen;
      std::size_t most = 0;
      for (const auto& [key, n] : counts) {
        task_keys.push_back(key);
        if (n > most) {
          most = n;
          chosen = key;
        }
      }
      if (target) chosen = *target;
      target_task = static_cast<int>(std::find(task_keys.begin(), task_keys.end(), chosen) - task_keys.begin());
      for (const auto& ex : train) kept.push_back(&ex);
      break;
    }
  }

  std::vector<TaskedInput> inputs;
  std::vector<Stance> labels;
  for (const StanceExample* ex : kept) {
    int task = 0;
    if (variant == MethodVariant::gp_icm) {
      task = static_cast<int>(std::lower_bound(task_keys.begin(), task_keys.end(), ex->task_key) - task_keys.begin());
    }
    inputs.push_back({ex->features, task});
    labels.push_back(ex->label);
  }

  const KernelSpec init = initial_kernel(variant, static_cast<int>(task_keys.size()), cfg);
  std::array<BinaryClassifier, kStanceCount> per_class;
  for (Stance s : kAllStances) {
    per_class[index_of(s)] = fit_one_vs_all(inputs, labels, s, init, cfg, cfg.optimizer.seed + index_of(s));
  }
  return StanceModel(variant, std::move(task_keys), target_task, std::move(per_class), cfg.fit);
}

}  // namespace stancekit
