#include "stancekit/evaluation.hpp"

#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "stancekit/errors.hpp"

namespace stancekit {
namespace {

double ratio(std::int64_t num, std::int64_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void finish_f1(Scores& s) {
  // Equal inputs short-circuit so that micro-F1 equals accuracy bit for bit.
  if (s.precision == s.recall) {
    s.f1_undefined = s.precision == 0.0;
    s.f1 = s.precision;
    return;
  }
  const double sum = s.precision + s.recall;
  s.f1_undefined = sum == 0.0;
  s.f1 = s.f1_undefined ? 0.0 : 2.0 * s.precision * s.recall / sum;
}

void flag(std::vector<std::string>& out, const Scores& s, const std::string& where) {
  if (s.precision_undefined) out.push_back("precision[" + where + "]");
  if (s.recall_undefined) out.push_back("recall[" + where + "]");
  if (s.f1_undefined) out.push_back("f1[" + where + "]");
}

nlohmann::ordered_json scores_json(const Scores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

void ConfusionMatrix::add(Stance truth, Stance predicted, std::int64_t count) {
  if (count < 0) throw ConfigError("confusion counts must be non-negative");
  m_[index_of(truth)][index_of(predicted)] += count;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : m_) {
    for (std::int64_t x : row) t += x;
  }
  return t;
}

std::int64_t ConfusionMatrix::true_positives(Stance k) const { return at(k, k); }

std::int64_t ConfusionMatrix::false_positives(Stance k) const {
  std::int64_t col = 0;
  for (Stance t : kAllStances) col += at(t, k);
  return col - at(k, k);
}

std::int64_t ConfusionMatrix::false_negatives(Stance k) const {
  std::int64_t row = 0;
  for (Stance p : kAllStances) row += at(k, p);
  return row - at(k, k);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < kStanceCount; ++i) {
    for (std::size_t j = 0; j < kStanceCount; ++j) m_[i][j] += other.m_[i][j];
  }
  return *this;
}

double EvaluationReport::accuracy() const {
  std::int64_t diag = 0;
  for (Stance k : kAllStances) diag += confusion.at(k, k);
  const std::int64_t n = confusion.total();
  return n == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(n);
}

EvaluationReport evaluate_confusion(const ConfusionMatrix& confusion) {
  EvaluationReport r;
  r.confusion = confusion;
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (Stance k : kAllStances) {
    Scores& s = r.per_class[index_of(k)];
    s.precision = ratio(confusion.true_positives(k), confusion.true_positives(k) + confusion.false_positives(k),
                        s.precision_undefined);
    s.recall = ratio(confusion.true_positives(k), confusion.support(k), s.recall_undefined);
    finish_f1(s);
    flag(r.undefined, s, std::string(to_string(k)));
    tp += confusion.true_positives(k);
    fp += confusion.false_positives(k);
    fn += confusion.false_negatives(k);

    const std::int64_t row = confusion.support(k);
    for (Stance j : kAllStances) {
      if (j != k && row > 0) {
        r.deviation[index_of(k)][index_of(j)] =
            100.0 * static_cast<double>(confusion.at(k, j)) / static_cast<double>(row);
      }
    }
  }
  r.micro.precision = ratio(tp, tp + fp, r.micro.precision_undefined);
  r.micro.recall = ratio(tp, tp + fn, r.micro.recall_undefined);
  finish_f1(r.micro);
  flag(r.undefined, r.micro, "micro");

  for (const Scores& s : r.per_class) {
    r.macro.precision += s.precision;
    r.macro.recall += s.recall;
  }
  r.macro.precision /= static_cast<double>(kStanceCount);
  r.macro.recall /= static_cast<double>(kStanceCount);
  finish_f1(r.macro);
  flag(r.undefined, r.macro, "macro");
  return r;
}

EvaluationReport score(std::span<const Stance> truths, std::span<const Stance> predictions) {
  if (truths.size() != predictions.size()) {
    throw ConfigError("score: " + std::to_string(truths.size()) + " truths but " +
                      std::to_string(predictions.size()) + " predictions");
  }
  if (truths.empty()) throw ConfigError("score: nothing to evaluate");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truths.size(); ++i) m.add(truths[i], predictions[i]);
  return evaluate_confusion(m);
}

EvaluationReport micro_average_across_folds(std::span<const ConfusionMatrix> folds) {
  if (folds.empty()) throw ConfigError("micro-averaging needs at least one fold");
  ConfusionMatrix pooled;
  for (const auto& f : folds) pooled += f;
  return evaluate_confusion(pooled);
}

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["total"] = report.confusion.total();
  nlohmann::ordered_json confusion = nlohmann::ordered_json::object();
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  nlohmann::ordered_json deviation = nlohmann::ordered_json::object();
  for (Stance k : kAllStances) {
    const std::string name(to_string(k));
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    nlohmann::ordered_json dev = nlohmann::ordered_json::object();
    for (Stance p : kAllStances) {
      row[std::string(to_string(p))] = report.confusion.at(k, p);
      if (p != k) dev[std::string(to_string(p))] = report.deviation[index_of(k)][index_of(p)];
    }
    confusion[name] = row;
    deviation[name] = dev;
    per_class[name] = scores_json(report.per_class[index_of(k)]);
    per_class[name]["support"] = report.confusion.support(k);
  }
  j["confusion"] = confusion;
  j["per_class"] = per_class;
  j["micro"] = scores_json(report.micro);
  j["macro"] = scores_json(report.macro);
  j["deviation_percent"] = deviation;
  j["undefined"] = report.undefined;
  return j.dump(2);
}

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

void write_report_csv(std::ostream& out, const EvaluationReport& report) {
  out << "row,precision,recall,f1,support,pct_as_supporting,pct_as_denying,pct_as_questioning\n";
  for (Stance k : kAllStances) {
    const Scores& s = report.per_class[index_of(k)];
    out << to_string(k) << ',' << format_fixed(s.precision) << ',' << format_fixed(s.recall) << ','
        << format_fixed(s.f1) << ',' << report.confusion.support(k);
    for (Stance j : kAllStances) {
      out << ',';
      if (j != k) out << format_fixed(report.deviation[index_of(k)][index_of(j)], 2);
    }
    out << '\n';
  }
  for (const auto& [name, s] : {std::pair{"micro", report.micro}, std::pair{"macro", report.macro}}) {
    out << name << ',' << format_fixed(s.precision) << ',' << format_fixed(s.recall) << ',' << format_fixed(s.f1)
        << ',' << report.confusion.total() << ",,,\n";
  }
}

}  // namespace stancekit
