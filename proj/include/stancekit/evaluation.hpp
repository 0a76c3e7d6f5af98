#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stancekit/stance.hpp"

namespace stancekit {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  void add(Stance truth, Stance predicted, std::int64_t count = 1);
  std::int64_t at(Stance truth, Stance predicted) const { return m_[index_of(truth)][index_of(predicted)]; }
  std::int64_t total() const;
  std::int64_t true_positives(Stance k) const;
  std::int64_t false_positives(Stance k) const;
  std::int64_t false_negatives(Stance k) const;
  std::int64_t support(Stance k) const { return true_positives(k) + false_negatives(k); }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::array<std::array<std::int64_t, kStanceCount>, kStanceCount> m_{};
};

// A ratio with a zero denominator is reported as 0 and flagged.
struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct EvaluationReport {
  ConfusionMatrix confusion;
  std::array<Scores, kStanceCount> per_class;
  Scores micro;
  // Macro P and R are means of the per-class values; macro F1 is their
  // harmonic mean (not the mean of per-class F1).
  Scores macro;
  // deviation[k][j]: percentage of true class k predicted as j, for j != k
  // (the diagonal is left at 0; recall covers it). Rows of absent classes
  // are all 0.
  std::array<std::array<double, kStanceCount>, kStanceCount> deviation{};
  // Human-readable names of every flagged 0/0, e.g. "precision[denying]".
  std::vector<std::string> undefined;

  double accuracy() const;
};

EvaluationReport evaluate_confusion(const ConfusionMatrix& confusion);

// Throws ConfigError on a length mismatch or empty input.
EvaluationReport score(std::span<const Stance> truths, std::span<const Stance> predictions);

// Pools the matrices, then scores once. Throws ConfigError on no folds.
EvaluationReport micro_average_across_folds(std::span<const ConfusionMatrix> folds);

// JSON object with confusion, per-class, micro, macro, deviation and
// undefined entries. Numbers keep full precision.
std::string report_to_json(const EvaluationReport& report);

// Header plus one row per class, then micro and macro rows:
// row,precision,recall,f1,support,pct_as_supporting,pct_as_denying,pct_as_questioning
void write_report_csv(std::ostream& out, const EvaluationReport& report);

// Fixed-point text used by every CSV writer in the toolkit.
std::string format_fixed(double value, int digits = 6);

}  // namespace stancekit
