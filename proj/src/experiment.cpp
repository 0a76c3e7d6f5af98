#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <ostream>
#include <random>
#include <thread>

#include <json.hpp>

#include "stancekit/baselines.hpp"
#include "stancekit/errors.hpp"
#include "stancekit/experiments.hpp"

namespace stancekit {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

template <typename E, std::size_t N>
std::optional<E> parse_enum(std::string_view s, const std::array<E, N>& values) {
  for (E v : values) {
    if (iequals(s, to_string(v))) return v;
  }
  return std::nullopt;
}

constexpr std::array kMethods = {Method::majority, Method::nb,        Method::maxent,
                                 Method::gp,       Method::gp_pooled, Method::gp_icm};

}  // namespace

std::string_view to_string(Protocol p) { return p == Protocol::loo ? "LOO" : "LPO"; }
std::string_view to_string(FoldUnit u) { return u == FoldUnit::rumour ? "rumour" : "event"; }
std::string_view to_string(FeatureKind f) { return f == FeatureKind::brown ? "brown" : "bow"; }

std::string_view to_string(Method m) {
  switch (m) {
    case Method::majority: return "Majority";
    case Method::nb: return "NB";
    case Method::maxent: return "MaxEnt";
    case Method::gp: return "GP";
    case Method::gp_pooled: return "GPPooled";
    case Method::gp_icm: return "GPICM";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view s) {
  return parse_enum(s, std::array{Protocol::loo, Protocol::lpo});
}
std::optional<FoldUnit> parse_fold_unit(std::string_view s) {
  return parse_enum(s, std::array{FoldUnit::rumour, FoldUnit::event});
}
std::optional<Method> parse_method(std::string_view s) { return parse_enum(s, kMethods); }
std::optional<FeatureKind> parse_feature_kind(std::string_view s) {
  return parse_enum(s, std::array{FeatureKind::brown, FeatureKind::bow});
}

bool is_gp(Method m) { return m == Method::gp || m == Method::gp_pooled || m == Method::gp_icm; }

MethodVariant gp_variant(Method m) {
  switch (m) {
    case Method::gp: return MethodVariant::gp;
    case Method::gp_pooled: return MethodVariant::gp_pooled;
    case Method::gp_icm: return MethodVariant::gp_icm;
    default: throw ConfigError(std::string(to_string(m)) + " is not a GP method");
  }
}

Featurizer Featurizer::brown(const BrownClusterTable& table) {
  Featurizer f;
  f.kind_ = FeatureKind::brown;
  f.table_ = &table;
  return f;
}

Featurizer Featurizer::bow(std::span<const std::vector<std::string>* const> training_tokens) {
  Vocabulary vocab;
  for (const auto* tokens : training_tokens) {
    for (const auto& t : *tokens) {
      if (!vocab.find(t)) vocab.add(t);
    }
  }
  return bow(std::move(vocab));
}

Featurizer Featurizer::bow(Vocabulary vocabulary) {
  Featurizer f;
  f.kind_ = FeatureKind::bow;
  f.vocab_ = std::move(vocabulary);
  return f;
}

SparseFeatureVector Featurizer::encode(const std::vector<std::string>& tokens) const {
  if (kind_ == FeatureKind::brown) return encode_brown(tokens, *table_);
  return encode_bow(tokens, vocab_);
}

namespace {

struct Cell {
  std::size_t fold = 0;
  int k = 0;
  Method method = Method::majority;
};

std::uint64_t cell_seed(std::uint64_t seed, const Cell& cell) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cell.fold), static_cast<std::uint32_t>(cell.k),
                    static_cast<std::uint32_t>(cell.method)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

class CellRunner {
 public:
  CellRunner(std::span<const LabeledInstance> corpus, const RunSettings& settings, const FoldSet& folds,
             std::vector<std::vector<std::string>> tokens, const BrownClusterTable* brown)
      : corpus_(corpus), settings_(settings), folds_(folds), tokens_(std::move(tokens)), brown_(brown) {}

  FoldResult run(const Cell& cell) const {
    const Fold& fold = folds_.folds[cell.fold];
    FoldResult out;
    out.fold = fold.unit;
    out.method = cell.method;
    out.k = cell.k;
    const auto start = std::chrono::steady_clock::now();
    try {
      predict(cell, fold, out);
    } catch (const std::exception& e) {
      out.failed = true;
      out.confusion = ConfusionMatrix{};
      out.predictions.clear();
      out.warnings.push_back(cell_name(cell) + " failed: " + e.what());
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }

 private:
  std::string cell_name(const Cell& cell) const {
    return std::string(to_string(cell.method)) + " k=" + std::to_string(cell.k) + " fold " +
           folds_.folds[cell.fold].unit;
  }

  void predict(const Cell& cell, const Fold& fold, FoldResult& out) const {
    std::vector<std::size_t> train_ids;
    for (std::size_t i : fold.train_for(cell.k)) {
      if (!looks_like_retweet(corpus_[i])) train_ids.push_back(i);
    }
    if (train_ids.empty()) throw ConfigError("no training tweets left after retweet filtering");

    Featurizer featurizer;
    if (settings_.features == FeatureKind::brown) {
      featurizer = Featurizer::brown(*brown_);
    } else {
      std::vector<const std::vector<std::string>*> seen;
      for (std::size_t i : train_ids) seen.push_back(&tokens_[i]);
      featurizer = Featurizer::bow(seen);
    }
    const FoldUnit unit = settings_.plan.fold_unit;
    std::vector<StanceExample> train;
    train.reserve(train_ids.size());
    for (std::size_t i : train_ids) {
      train.push_back({featurizer.encode(tokens_[i]), fold_key(corpus_[i], unit), *corpus_[i].label});
    }
    std::vector<SparseFeatureVector> test;
    test.reserve(fold.test.size());
    for (std::size_t i : fold.test) test.push_back(featurizer.encode(tokens_[i]));

    std::vector<Stance> predicted;
    std::vector<std::array<double, kStanceCount>> probabilities;
    switch (cell.method) {
      case Method::majority: predicted = run_baseline_majority(train, test.size()); break;
      case Method::nb: predicted = run_baseline_nb(train, test, settings_.nb_alpha); break;
      case Method::maxent: predicted = run_baseline_logreg(train, test, settings_.l2_strength); break;
      case Method::gp:
      case Method::gp_pooled:
      case Method::gp_icm: {
        TrainingConfig cfg = settings_.training;
        cfg.optimizer.seed = cell_seed(settings_.plan.seed, cell);
        const StanceModel model = train_stance_model(train, gp_variant(cell.method), fold.unit, cfg);
        for (Stance s : kAllStances) {
          for (const auto& w : model.classifier(s).warnings) {
            out.warnings.push_back(cell_name(cell) + " [" + std::string(to_string(s)) + "]: " + w);
          }
        }
        int clamped = 0;
        for (const auto& x : test) {
          const StancePrediction p = model.predict(x, fold.unit);
          predicted.push_back(p.label);
          probabilities.push_back(p.probabilities);
          clamped += p.clamped_variances;
        }
        if (clamped > 0) {
          out.warnings.push_back(cell_name(cell) + ": clamped " + std::to_string(clamped) +
                                 " negative predictive variances");
        }
        break;
      }
    }
    for (std::size_t t = 0; t < fold.test.size(); ++t) {
      const LabeledInstance& inst = corpus_[fold.test[t]];
      out.confusion.add(*inst.label, predicted[t]);
      CellPrediction row{inst.tweet_id, *inst.label, predicted[t], std::nullopt};
      if (!probabilities.empty()) row.probabilities = probabilities[t];
      out.predictions.push_back(std::move(row));
    }
  }

  std::span<const LabeledInstance> corpus_;
  const RunSettings& settings_;
  const FoldSet& folds_;
  std::vector<std::vector<std::string>> tokens_;
  const BrownClusterTable* brown_;
};

}  // namespace

ExperimentResult run_experiment(std::span<const LabeledInstance> corpus, const RunSettings& settings,
                                const TextResources& resources, const BrownClusterTable* brown) {
  const ExperimentPlan& plan = settings.plan;
  plan.validate();
  if (settings.features == FeatureKind::brown && brown == nullptr) {
    throw ConfigError("Brown features need a cluster table");
  }
  for (const auto& inst : corpus) {
    if (!inst.label) throw ConfigError("tweet " + inst.tweet_id + " has no stance label");
  }
  const FoldSet folds = build_folds(corpus, plan);

  ExperimentResult result;
  result.skipped_folds = folds.skipped;
  result.warnings = folds.skipped;
  for (const auto& f : folds.folds) result.folds.push_back(f.unit);

  std::vector<Cell> cells;
  for (std::size_t f = 0; f < folds.folds.size(); ++f) {
    for (int k : plan.target_train_sizes) {
      for (Method m : plan.methods) {
        if (k == 0 && (m == Method::gp || m == Method::gp_icm)) continue;
        cells.push_back({f, k, m});
      }
    }
  }
  const bool has_zero =
      std::find(plan.target_train_sizes.begin(), plan.target_train_sizes.end(), 0) != plan.target_train_sizes.end();
  for (Method m : plan.methods) {
    if (has_zero && (m == Method::gp || m == Method::gp_icm)) {
      result.warnings.push_back(std::string(to_string(m)) + " omitted at k=0: no target tweets in training");
    }
  }

  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(corpus.size());
  for (const auto& inst : corpus) tokens.push_back(preprocess(inst.text, resources));
  const CellRunner runner(corpus, settings, folds, std::move(tokens), brown);

  result.cells.resize(cells.size());
  const auto workers = static_cast<std::size_t>(std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(settings.jobs, 1)), 1, std::max<std::size_t>(cells.size(), 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) result.cells[i] = runner.run(cells[i]);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (const auto& cell : result.cells) {
    result.warnings.insert(result.warnings.end(), cell.warnings.begin(), cell.warnings.end());
    if (cell.failed) ++result.failed_cells;
  }
  for (Method m : plan.methods) {
    for (int k : plan.target_train_sizes) {
      std::vector<ConfusionMatrix> matrices;
      for (const auto& cell : result.cells) {
        if (cell.method == m && cell.k == k && !cell.failed) matrices.push_back(cell.confusion);
      }
      if (matrices.empty()) continue;
      result.aggregates.push_back({m, k, static_cast<int>(matrices.size()), micro_average_across_folds(matrices)});
    }
  }
  return result;
}

namespace {

void write_scores_row(std::ostream& out, std::string_view method, int k, const std::string& fold, std::int64_t n,
                      const EvaluationReport& r) {
  out << method << ',' << k << ',' << fold << ',' << n << ',' << format_fixed(r.micro.f1) << ','
      << format_fixed(r.macro.f1);
  for (const Scores& s : r.per_class) {
    out << ',' << format_fixed(s.precision) << ',' << format_fixed(s.recall) << ',' << format_fixed(s.f1);
  }
  out << '\n';
}

}  // namespace

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
  out << "method,k,fold,n_test,micro_f1,macro_f1";
  for (Stance s : kAllStances) {
    for (const char* m : {"precision", "recall", "f1"}) out << ',' << to_string(s) << '_' << m;
  }
  out << '\n';
  for (const auto& cell : result.cells) {
    if (cell.failed) continue;
    write_scores_row(out, to_string(cell.method), cell.k, cell.fold, cell.confusion.total(),
                     evaluate_confusion(cell.confusion));
  }
  for (const auto& row : result.aggregates) {
    write_scores_row(out, to_string(row.method), row.k, "ALL", row.report.confusion.total(), row.report);
  }
}

void write_predictions_csv(std::ostream& out, const ExperimentResult& result) {
  out << "method,k,fold,tweet_id,truth,predicted,p_supporting,p_denying,p_questioning\n";
  for (const auto& cell : result.cells) {
    for (const auto& p : cell.predictions) {
      out << to_string(cell.method) << ',' << cell.k << ',' << cell.fold << ',' << p.tweet_id << ','
          << to_string(p.truth) << ',' << to_string(p.predicted);
      for (std::size_t c = 0; c < kStanceCount; ++c) {
        out << ',';
        if (p.probabilities) out << format_fixed((*p.probabilities)[c], 9);
      }
      out << '\n';
    }
  }
}

void write_timings_csv(std::ostream& out, const ExperimentResult& result) {
  out << "method,k,fold,seconds,status\n";
  for (const auto& cell : result.cells) {
    out << to_string(cell.method) << ',' << cell.k << ',' << cell.fold << ',' << format_fixed(cell.seconds, 3) << ','
        << (cell.failed ? "failed" : "ok") << '\n';
  }
}

std::string experiment_report_json(const ExperimentResult& result) {
  nlohmann::ordered_json doc;
  doc["folds"] = result.folds;
  doc["skipped_folds"] = result.skipped_folds;
  doc["failed_cells"] = result.failed_cells;
  doc["warnings"] = result.warnings;
  auto& rows = doc["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& row : result.aggregates) {
    nlohmann::ordered_json item;
    item["method"] = to_string(row.method);
    item["k"] = row.k;
    item["folds"] = row.folds;
    item["report"] = nlohmann::ordered_json::parse(report_to_json(row.report));
    rows.push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

}  // namespace stancekit
