#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "stancekit/corpus_io.hpp"
#include "stancekit/errors.hpp"
#include "stancekit/experiments.hpp"

namespace stancekit {
namespace {

const std::string kData = STANCEKIT_DATA_DIR;

struct UnitSpec {
  std::string rumour;
  std::string event;
  int supporting = 0, denying = 0, questioning = 0;
};

// Tweets of each unit get order 0..n-1 in the listed label order.
std::vector<LabeledInstance> corpus_of(const std::vector<UnitSpec>& units) {
  std::vector<LabeledInstance> out;
  int id = 0;
  for (const auto& u : units) {
    std::int64_t order = 0;
    auto emit = [&](Stance s, int n, const char* word) {
      for (int i = 0; i < n; ++i) {
        LabeledInstance inst;
        inst.tweet_id = "t" + std::to_string(id++);
        inst.text = std::string(word) + " " + u.rumour;
        inst.rumour_id = u.rumour;
        inst.event_id = u.event.empty() ? u.rumour : u.event;
        inst.order_index = order++;
        inst.label = s;
        out.push_back(inst);
      }
    };
    emit(Stance::supporting, u.supporting, "confirmed");
    emit(Stance::denying, u.denying, "hoax");
    emit(Stance::questioning, u.questioning, "really");
  }
  return out;
}

const TextResources& resources() {
  static const TextResources r = TextResources::load(kData + "/stopwords_en.txt", kData + "/emoticons.tsv");
  return r;
}

const std::vector<LabeledInstance>& synthetic() {
  static const auto c = load_corpus(kData + "/synthetic/rumours.jsonl", {}).instances;
  return c;
}

const BrownClusterTable& brown() {
  static const BrownClusterTable t =
      BrownClusterTable::load(kData + "/synthetic/brown_paths.txt").rekeyed([](std::string_view w) {
        return canonical_word(w);
      });
  return t;
}

ExperimentPlan lpo(std::vector<int> sizes, std::vector<Method> methods) {
  ExperimentPlan p;
  p.protocol = Protocol::lpo;
  p.target_train_sizes = std::move(sizes);
  p.methods = std::move(methods);
  return p;
}

ExperimentPlan loo(std::vector<Method> methods) {
  ExperimentPlan p;
  p.protocol = Protocol::loo;
  p.target_train_sizes = {0};
  p.methods = std::move(methods);
  return p;
}

TEST(Names, RoundTrip) {
  for (Method m : {Method::majority, Method::nb, Method::maxent, Method::gp, Method::gp_pooled, Method::gp_icm}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(parse_method("gpicm"), Method::gp_icm);
  EXPECT_EQ(parse_method("svm"), std::nullopt);
  EXPECT_EQ(parse_protocol("loo"), Protocol::loo);
  EXPECT_EQ(parse_fold_unit("EVENT"), FoldUnit::event);
  EXPECT_EQ(parse_feature_kind("bow"), FeatureKind::bow);
}

TEST(ExperimentPlan, Validation) {
  EXPECT_NO_THROW(lpo({0, 10, 20}, {Method::majority}).validate());
  EXPECT_THROW(loo({}).validate(), ConfigError);
  auto bad_loo = loo({Method::majority});
  bad_loo.target_train_sizes = {0, 10};
  EXPECT_THROW(bad_loo.validate(), ConfigError);
  EXPECT_THROW(lpo({10, 10}, {Method::majority}).validate(), ConfigError);
  EXPECT_THROW(lpo({-1}, {Method::majority}).validate(), ConfigError);
  EXPECT_THROW(lpo({10}, {Method::nb, Method::nb}).validate(), ConfigError);
  auto early = lpo({0, 10, 20}, {Method::nb});
  early.test_offset = 15;
  EXPECT_THROW(early.validate(), ConfigError);
  early.test_offset = 20;
  EXPECT_NO_THROW(early.validate());
  EXPECT_EQ(lpo({30, 0, 10}, {Method::nb}).effective_test_offset(), 30);
}

TEST(BuildFolds, SevenRumoursGiveSevenFolds) {
  const FoldSet folds = build_folds(synthetic(), lpo({0, 10, 20, 30, 40, 50}, {Method::majority}));
  EXPECT_EQ(folds.folds.size(), 7u);
  EXPECT_TRUE(folds.skipped.empty());
}

TEST(BuildFolds, FiveEventsGiveFiveFolds) {
  auto plan = loo({Method::majority});
  plan.fold_unit = FoldUnit::event;
  const FoldSet folds = build_folds(synthetic(), plan);
  ASSERT_EQ(folds.folds.size(), 5u);
  std::size_t tested = 0;
  for (const auto& f : folds.folds) tested += f.test.size();
  EXPECT_EQ(tested, synthetic().size());
}

TEST(BuildFolds, LooSplitSizes) {
  const auto corpus = corpus_of({{"a", "", 3, 0, 0}, {"b", "", 2, 2, 0}});
  const FoldSet folds = build_folds(corpus, loo({Method::majority}));
  ASSERT_EQ(folds.folds.size(), 2u);
  EXPECT_EQ(folds.folds[0].train_for(0).size(), 4u);
  EXPECT_EQ(folds.folds[0].test.size(), 3u);
  EXPECT_EQ(folds.folds[1].train_for(0).size(), 3u);
  EXPECT_EQ(folds.folds[1].test.size(), 4u);
}

TEST(BuildFolds, NeedsTwoUnits) {
  const auto corpus = corpus_of({{"only", "", 5, 5, 5}});
  try {
    build_folds(corpus, loo({Method::majority}));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("need >= 2 fold units"), std::string::npos);
  }
}

TEST(BuildFolds, ShortTargetSkippedWithMessage) {
  const auto corpus = corpus_of({{"long", "", 8, 4, 0}, {"short", "", 3, 2, 0}, {"other", "", 6, 6, 0}});
  const FoldSet folds = build_folds(corpus, lpo({0, 5}, {Method::majority}));
  ASSERT_EQ(folds.folds.size(), 2u);
  ASSERT_EQ(folds.skipped.size(), 1u);
  EXPECT_NE(folds.skipped[0].find("short"), std::string::npos);
  // A unit of exactly test_offset tweets has nothing left to test.
  const FoldSet exact = build_folds(corpus, lpo({0, 12}, {Method::majority}));
  EXPECT_EQ(exact.folds.size(), 0u);
  EXPECT_EQ(exact.skipped.size(), 3u);
}

TEST(BuildFolds, TemporalOrderWithTweetIdTieBreak) {
  std::vector<LabeledInstance> corpus = corpus_of({{"a", "", 2, 0, 0}, {"b", "ev", 1, 0, 0}, {"c", "ev", 1, 0, 0}});
  corpus[0].order_index = 5;
  corpus[1].order_index = 1;
  auto plan = lpo({0, 1}, {Method::majority});
  const FoldSet rumours = build_folds(corpus, plan);
  EXPECT_EQ(corpus[rumours.folds[0].target[0]].tweet_id, "t1");
  EXPECT_EQ(corpus[rumours.folds[0].test[0]].tweet_id, "t0");
  // Event mode: b and c both have order 0, so tweet ids decide.
  plan.fold_unit = FoldUnit::event;
  const FoldSet events = build_folds(corpus, plan);
  const Fold& ev = events.folds[1];
  ASSERT_EQ(ev.unit, "ev");
  EXPECT_EQ(corpus[ev.target[0]].tweet_id, "t2");
  EXPECT_EQ(corpus[ev.target[1]].tweet_id, "t3");
}

TEST(BuildFolds, MissingEventIdRejectedInEventMode) {
  auto corpus = corpus_of({{"a", "", 2, 0, 0}, {"b", "", 2, 0, 0}});
  corpus[1].event_id.clear();
  auto plan = loo({Method::majority});
  plan.fold_unit = FoldUnit::event;
  EXPECT_THROW(build_folds(corpus, plan), ConfigError);
}

// Random corpora: every fold keeps test and train apart and its test ids
// do not move with k.
TEST(BuildFolds, DisjointAndFixedAcrossK) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<UnitSpec> units;
    const int n_units = 2 + static_cast<int>(rng() % 5);
    for (int u = 0; u < n_units; ++u) {
      units.push_back({"u" + std::to_string(u), "", static_cast<int>(rng() % 15), static_cast<int>(rng() % 10),
                       static_cast<int>(rng() % 10)});
    }
    auto corpus = corpus_of(units);
    std::shuffle(corpus.begin(), corpus.end(), rng);
    const std::vector<int> sizes{0, 3, 6, 9};
    const FoldSet folds = build_folds(corpus, lpo(sizes, {Method::majority}));
    EXPECT_EQ(folds.folds.size() + folds.skipped.size(), static_cast<std::size_t>(n_units));
    for (const auto& fold : folds.folds) {
      std::vector<std::string> test_ids;
      for (std::size_t i : fold.test) test_ids.push_back(corpus[i].tweet_id);
      for (std::size_t i : fold.test) EXPECT_EQ(corpus[i].rumour_id, fold.unit);
      for (int k : sizes) {
        const auto train = fold.train_for(k);
        std::set<std::string> train_ids;
        for (std::size_t i : train) train_ids.insert(corpus[i].tweet_id);
        for (const auto& id : test_ids) EXPECT_FALSE(train_ids.count(id)) << id;
        EXPECT_EQ(train.size(), fold.reference.size() + static_cast<std::size_t>(k));
      }
      EXPECT_EQ(fold.reference.size() + fold.target.size(), corpus.size());
      for (std::size_t j = 1; j < fold.target.size(); ++j) {
        EXPECT_LT(corpus[fold.target[j - 1]].order_index, corpus[fold.target[j]].order_index);
      }
    }
  }
}

TEST(Featurizer, BowUsesTrainingVocabularyOnly) {
  const std::vector<std::string> a{"fire", "smoke"}, b{"smoke", "eye"};
  const std::vector<const std::vector<std::string>*> train{&a, &b};
  const Featurizer f = Featurizer::bow(train);
  EXPECT_EQ(f.vocabulary().tokens(), (std::vector<std::string>{"fire", "smoke", "eye"}));
  EXPECT_EQ(f.encode({"eye", "eye", "zoo"}), SparseFeatureVector::from_dense({0, 0, 2}));
}

TEST(Featurizer, BrownMapsPipelineTokens) {
  const Featurizer f = Featurizer::brown(brown());
  const auto tokens = preprocess("Confirmed!! fire, really?", resources());
  const SparseFeatureVector x = f.encode(tokens);
  EXPECT_EQ(x.total_count(), 4);  // confirm, fire, realli, ?
}

// Three units with hand-counted LOO majority predictions:
//   fold a: b+c has s3 d8 q9 -> questioning, 1 right of 10
//   fold b: a+c has s7 d4 q9 -> questioning, 1 right of 10
//   fold c: a+b has s8 d10 q2 -> denying,    1 right of 10
TEST(RunExperiment, MajorityMatchesHandCount) {
  const auto corpus = corpus_of({{"a", "", 6, 3, 1}, {"b", "", 2, 7, 1}, {"c", "", 1, 1, 8}});
  RunSettings s;
  s.plan = loo({Method::majority});
  s.features = FeatureKind::bow;
  const ExperimentResult r = run_experiment(corpus, s, resources(), nullptr);
  ASSERT_EQ(r.aggregates.size(), 1u);
  const EvaluationReport& rep = r.aggregates[0].report;
  EXPECT_EQ(r.aggregates[0].folds, 3);
  EXPECT_DOUBLE_EQ(rep.micro.f1, 0.1);
  const double p = (0.0 + 0.1 + 0.1) / 3.0;
  const double rec = (0.0 + 1.0 / 11.0 + 0.2) / 3.0;
  EXPECT_NEAR(rep.macro.f1, 2 * p * rec / (p + rec), 1e-15);
  EXPECT_TRUE(rep.per_class[0].precision_undefined);
  EXPECT_EQ(rep.confusion.at(Stance::denying, Stance::questioning), 10);
}

TEST(RunExperiment, RetweetsLeaveTrainingOnly) {
  // Reference units hold 3 supporting tweets and 5 questioning retweets.
  auto corpus = corpus_of({{"a", "", 3, 0, 5}, {"b", "", 3, 0, 5}});
  for (auto& inst : corpus) {
    if (inst.label == Stance::questioning) inst.text = "RT @x: really " + inst.rumour_id;
  }
  RunSettings s;
  s.plan = loo({Method::majority});
  s.features = FeatureKind::bow;
  const ExperimentResult r = run_experiment(corpus, s, resources(), nullptr);
  const EvaluationReport& rep = r.aggregates[0].report;
  EXPECT_EQ(rep.confusion.total(), 16);
  EXPECT_EQ(rep.confusion.at(Stance::questioning, Stance::supporting), 10);
  EXPECT_EQ(rep.confusion.at(Stance::supporting, Stance::supporting), 6);
}

TEST(RunExperiment, UnlabelledCorpusRejected) {
  auto corpus = corpus_of({{"a", "", 2, 0, 0}, {"b", "", 2, 0, 0}});
  corpus[2].label.reset();
  RunSettings s;
  s.plan = loo({Method::majority});
  s.features = FeatureKind::bow;
  EXPECT_THROW(run_experiment(corpus, s, resources(), nullptr), ConfigError);
  corpus[2].label = Stance::denying;
  s.features = FeatureKind::brown;
  EXPECT_THROW(run_experiment(corpus, s, resources(), nullptr), ConfigError);
}

RunSettings sweep_settings(std::vector<Method> methods) {
  RunSettings s;
  s.plan = lpo({0, 10, 20, 30, 40, 50}, std::move(methods));
  s.training.optimize = false;
  return s;
}

TEST(RunExperiment, SweepGridShape) {
  const RunSettings s =
      sweep_settings({Method::majority, Method::nb, Method::maxent, Method::gp, Method::gp_pooled, Method::gp_icm});
  const ExperimentResult r = run_experiment(synthetic(), s, resources(), &brown());
  std::map<Method, std::vector<int>> ks;
  for (const auto& row : r.aggregates) {
    ks[row.method].push_back(row.k);
    EXPECT_EQ(row.folds, 7);
  }
  for (Method m : {Method::majority, Method::nb, Method::maxent, Method::gp_pooled}) {
    EXPECT_EQ(ks[m], (std::vector<int>{0, 10, 20, 30, 40, 50})) << to_string(m);
  }
  EXPECT_EQ(ks[Method::gp], (std::vector<int>{10, 20, 30, 40, 50}));
  EXPECT_EQ(ks[Method::gp_icm], (std::vector<int>{10, 20, 30, 40, 50}));
  EXPECT_EQ(r.failed_cells, 0);
  EXPECT_EQ(r.cells.size(), 7u * (4 * 6 + 2 * 5));

  // Within each fold every cell predicts the same tweet ids.
  std::map<std::string, std::vector<std::string>> ids;
  for (const auto& cell : r.cells) {
    std::vector<std::string> got;
    for (const auto& p : cell.predictions) got.push_back(p.tweet_id);
    EXPECT_EQ(static_cast<std::int64_t>(got.size()), cell.confusion.total());
    auto [it, fresh] = ids.emplace(cell.fold, got);
    if (!fresh) EXPECT_EQ(it->second, got) << cell.fold;
  }
  EXPECT_EQ(r.aggregates.size(), 34u);

  std::ostringstream csv;
  write_results_csv(csv, r);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + static_cast<long>(r.cells.size()) + 34);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "method,k,fold,n_test,micro_f1,macro_f1,supporting_precision,supporting_recall,supporting_f1,"
            "denying_precision,denying_recall,denying_f1,questioning_precision,questioning_recall,questioning_f1");
}

TEST(RunExperiment, DeterministicAcrossRunsAndJobs) {
  RunSettings s = sweep_settings({Method::nb, Method::maxent, Method::gp_icm});
  s.plan.target_train_sizes = {0, 50};
  s.training.optimize = true;
  s.training.optimizer.restarts = 1;
  s.training.optimizer.max_iters = 3;
  auto render = [&](int jobs) {
    s.jobs = jobs;
    const ExperimentResult r = run_experiment(synthetic(), s, resources(), &brown());
    std::ostringstream out;
    write_results_csv(out, r);
    write_predictions_csv(out, r);
    out << experiment_report_json(r);
    return out.str();
  };
  const std::string first = render(1);
  EXPECT_EQ(first, render(1));
  EXPECT_EQ(first, render(3));
}

TEST(RunExperiment, FailedCellBecomesWarning) {
  // Fold a's first two tweets are retweets, so GP has no target data at k=2.
  auto corpus = corpus_of({{"a", "", 3, 3, 0}, {"b", "", 3, 3, 0}});
  corpus[0].is_retweet = corpus[1].is_retweet = true;
  RunSettings s;
  s.plan = lpo({2}, {Method::majority, Method::gp});
  s.features = FeatureKind::bow;
  s.training.optimize = false;
  const ExperimentResult r = run_experiment(corpus, s, resources(), nullptr);
  EXPECT_EQ(r.failed_cells, 1);
  const auto it = std::find_if(r.cells.begin(), r.cells.end(), [](const FoldResult& c) { return c.failed; });
  ASSERT_NE(it, r.cells.end());
  EXPECT_EQ(it->fold, "a");
  EXPECT_EQ(it->method, Method::gp);
  EXPECT_FALSE(r.warnings.empty());
  // GP aggregates over the surviving fold only.
  for (const auto& row : r.aggregates) EXPECT_EQ(row.folds, row.method == Method::gp ? 1 : 2);
}

}  // namespace
}  // namespace stancekit
