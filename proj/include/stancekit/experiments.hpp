#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stancekit/corpus.hpp"
#include "stancekit/evaluation.hpp"
#include "stancekit/multiclass.hpp"
#include "stancekit/text_pipeline.hpp"

namespace stancekit {

enum class Protocol { loo, lpo };
enum class FoldUnit { rumour, event };
enum class Method { majority, nb, maxent, gp, gp_pooled, gp_icm };
enum class FeatureKind { brown, bow };

std::string_view to_string(Protocol p);
std::string_view to_string(FoldUnit u);
std::string_view to_string(Method m);
std::string_view to_string(FeatureKind f);
std::optional<Protocol> parse_protocol(std::string_view s);
std::optional<FoldUnit> parse_fold_unit(std::string_view s);
std::optional<Method> parse_method(std::string_view s);
std::optional<FeatureKind> parse_feature_kind(std::string_view s);

bool is_gp(Method m);
MethodVariant gp_variant(Method m);

struct ExperimentPlan {
  Protocol protocol = Protocol::lpo;
  std::vector<int> target_train_sizes{0, 10, 20, 30, 40, 50};
  // First test position within the target unit; defaults to max(k).
  std::optional<int> test_offset;
  FoldUnit fold_unit = FoldUnit::rumour;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::majority, Method::nb,        Method::maxent,
                              Method::gp,       Method::gp_pooled, Method::gp_icm};

  int effective_test_offset() const;
  // Throws ConfigError: LOO needs sizes == {0}; sizes must be distinct,
  // non-negative and <= test offset; methods non-empty and distinct.
  void validate() const;
};

const std::string& fold_key(const LabeledInstance& instance, FoldUnit unit);

struct Fold {
  std::string unit;
  // Corpus indices of every other unit, in corpus order.
  std::vector<std::size_t> reference;
  // Target unit in temporal order: (order_index, tweet_id).
  std::vector<std::size_t> target;
  // target[test_offset..], identical for every k.
  std::vector<std::size_t> test;

  // reference + the first k target tweets (before retweet filtering).
  std::vector<std::size_t> train_for(int k) const;
};

struct FoldSet {
  std::vector<Fold> folds;
  // One message per skipped unit.
  std::vector<std::string> skipped;
};

// One fold per distinct unit, ordered by unit name. Units with no more than
// test_offset tweets are skipped with a message. Throws ConfigError with
// fewer than two units.
FoldSet build_folds(std::span<const LabeledInstance> corpus, const ExperimentPlan& plan);

// Turns token lists into feature vectors for one training split.
class Featurizer {
 public:
  // `table` must already be keyed by pipeline token forms.
  static Featurizer brown(const BrownClusterTable& table);
  // Vocabulary of every token in the training split, in first-seen order.
  static Featurizer bow(std::span<const std::vector<std::string>* const> training_tokens);
  static Featurizer bow(Vocabulary vocabulary);

  FeatureKind kind() const { return kind_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  SparseFeatureVector encode(const std::vector<std::string>& tokens) const;

 private:
  FeatureKind kind_ = FeatureKind::brown;
  const BrownClusterTable* table_ = nullptr;
  Vocabulary vocab_;
};

struct RunSettings {
  ExperimentPlan plan;
  TrainingConfig training;
  FeatureKind features = FeatureKind::brown;
  double l2_strength = 1.0;
  double nb_alpha = 1.0;
  // Worker threads for independent cells; results do not depend on it.
  int jobs = 1;
};

struct CellPrediction {
  std::string tweet_id;
  Stance truth = Stance::supporting;
  Stance predicted = Stance::supporting;
  // GP methods only.
  std::optional<std::array<double, kStanceCount>> probabilities;
};

struct FoldResult {
  std::string fold;
  Method method = Method::majority;
  int k = 0;
  ConfusionMatrix confusion;
  std::vector<CellPrediction> predictions;
  double seconds = 0.0;
  std::vector<std::string> warnings;
  bool failed = false;
};

struct AggregateRow {
  Method method = Method::majority;
  int k = 0;
  int folds = 0;
  EvaluationReport report;
};

struct ExperimentResult {
  std::vector<std::string> folds;
  std::vector<FoldResult> cells;
  std::vector<AggregateRow> aggregates;
  std::vector<std::string> warnings;
  std::vector<std::string> skipped_folds;
  int failed_cells = 0;
};

// Runs every (fold, k, method) cell and micro-averages each (method, k)
// across folds. GP and GPICM cells at k = 0 are omitted with a warning.
// `brown` is required for Brown features and must be keyed by pipeline
// forms. Throws ConfigError for unlabelled tweets or an invalid plan;
// failing cells are reported as warnings and left out of the aggregates.
ExperimentResult run_experiment(std::span<const LabeledInstance> corpus, const RunSettings& settings,
                                const TextResources& resources, const BrownClusterTable* brown);

// method,k,fold,n_test,micro_f1,macro_f1,{supporting,denying,questioning}_{precision,recall,f1}
// Per-fold rows first, then fold = "ALL" aggregate rows.
void write_results_csv(std::ostream& out, const ExperimentResult& result);
void write_predictions_csv(std::ostream& out, const ExperimentResult& result);
void write_timings_csv(std::ostream& out, const ExperimentResult& result);
// Aggregate reports (full evaluation JSON per method and k), warnings and
// skipped folds.
std::string experiment_report_json(const ExperimentResult& result);

}  // namespace stancekit
