// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stancekit/commands.hpp"
#include "stancekit/evaluation.hpp"
#include "stancekit/gp_inference.hpp"
#include "stancekit/kernels.hpp"
#include "stancekit/multiclass.hpp"
#include "stancekit/run_config.hpp"
#include "stancekit/text_pipeline.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace stancekit;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kData = STANCEKIT_DATA_DIR;
const fs::path kGolden = STANCEKIT_GOLDEN_DIR;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

FitConfig tight() {
  FitConfig cfg;
  cfg.ep_tolerance = 1e-11;
  cfg.ep_max_sweeps = 2000;
  return cfg;
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome ep_matches_oracle() {
  Outcome out;
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int over = 0, points = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 4;
    const BinaryDataset data = testing::random_binary(rng, n, 2, 1);
    const KernelSpec k = make_linear_kernel(std::uniform_real_distribution<double>(0.3, 2.0)(rng));
    const EpState s = ep_fit(data, k, {});
    for (int t = 0; t < 3; ++t) {
      const TaskedInput test{testing::random_sparse(rng, 2, 3, 0.7), 0};
      const double err = std::abs(predict_probability(s, data, k, test) - testing::exact_predictive(data, k, test, 120));
      worst = std::max(worst, err);
      over += err > 2e-2;
      ++points;
    }
  }
  const double took = seconds_since(start);
  if (worst > 2e-2) {
    out.fail(std::to_string(over) + " of " + std::to_string(points) + " predictions off by more than 2e-2, max " +
             fmt(worst));
  }
  if (took >= 60.0) out.fail("took " + fmt(took) + " s");
  if (out.pass) out.detail = "25 datasets, max abs error " + fmt(worst) + ", " + fmt(took) + " s";
  return out;
}

double evidence_at(const BinaryDataset& data, const KernelSpec& like, const Eigen::VectorXd& theta) {
  return ep_fit(data, from_unconstrained(like, theta), tight()).log_evidence;
}

Outcome gradients_match_differences() {
  Outcome out;
  std::mt19937_64 rng(202);
  double worst = 0.0, worst_plain = 0.0;
  int coords = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const BinaryDataset data = testing::random_binary(rng, 6, 4, 2);
    const KernelSpec k = trial % 4 == 0 ? make_linear_kernel(0.9) : testing::random_icm(rng, 2);
    const Eigen::VectorXd g = log_evidence_gradient(ep_fit(data, k, tight()), data, k);
    const Eigen::VectorXd theta = to_unconstrained(k);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd up = theta, down = theta;
      up(i) += h;
      down(i) -= h;
      const double fd = (evidence_at(data, k, up) - evidence_at(data, k, down)) / (2 * h);
      const double rel = std::abs(g(i) - fd) / std::max(std::abs(fd), 1e-3);
      worst = std::max(worst, rel);
      worst_plain = std::max(worst_plain, std::abs(g(i) - fd) / std::abs(fd));
      ++coords;
      if (rel >= 1e-4) out.fail("trial " + std::to_string(trial) + " coord " + std::to_string(i) + " rel " + fmt(rel));
    }
  }
  if (out.pass) out.detail = "12 problems, " + std::to_string(coords) + " coordinates, max rel error " + fmt(worst) +
                          " (without floor " + fmt(worst_plain) + ")";
  return out;
}

Outcome grams_are_psd() {
  Outcome out;
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> tasks(1, 4), size(2, 25);
  double lowest = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = tasks(rng);
    const KernelSpec k = testing::random_icm(rng, d);
    std::vector<TaskedInput> inputs;
    std::uniform_int_distribution<int> task(0, d - 1);
    for (int i = size(rng); i > 0; --i) inputs.push_back({testing::random_sparse(rng, 15, 3, 0.3), task(rng)});
    const Eigen::MatrixXd gram = gram_matrix(inputs, k, 0.0);
    const double low = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues()(0);
    lowest = std::min(lowest, low);
  }
  if (lowest < -1e-8) out.fail("min eigenvalue " + fmt(lowest));
  out.detail = "1000 Gram matrices, min eigenvalue " + fmt(lowest);
  return out;
}

Outcome icm_blocks_are_independent() {
  Outcome out;
  std::mt19937_64 rng(404);
  std::vector<StanceExample> train;
  std::uniform_int_distribution<int> label(0, 2);
  for (int i = 0; i < 40; ++i) {
    StanceExample ex;
    ex.features = testing::random_sparse(rng, 8, 3, 0.4);
    ex.task_key = i % 2 == 0 ? "a" : "b";
    ex.label = stance_at(static_cast<std::size_t>(label(rng)));
    train.push_back(ex);
  }
  TrainingConfig cfg;
  cfg.fit.ep_tolerance = 1e-11;
  cfg.fit.ep_max_sweeps = 2000;
  cfg.optimize = false;
  cfg.initial_signal_variance = 1.0;
  cfg.initial_kappa = 1.0;
  cfg.initial_v = 0.0;
  const StanceModel icm = train_stance_model(train, MethodVariant::gp_icm, std::string("a"), cfg);
  const StanceModel gp = train_stance_model(train, MethodVariant::gp, std::string("a"), cfg);
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const SparseFeatureVector x = testing::random_sparse(rng, 8, 3, 0.4);
    const auto p = icm.predict(x, "a");
    const auto q = gp.predict(x, "a");
    for (std::size_t c = 0; c < kStanceCount; ++c) worst = std::max(worst, std::abs(p.probabilities[c] - q.probabilities[c]));
    if (p.label != q.label) out.fail("label differs on test " + std::to_string(t));
  }
  if (worst > 1e-6) out.fail("max difference " + fmt(worst));
  if (out.pass) out.detail = "30 test tweets x 3 classes, max difference " + fmt(worst);
  return out;
}

Outcome evaluation_is_exact() {
  Outcome out;
  using enum Stance;
  const std::vector<Stance> truth{supporting, supporting, denying, questioning};
  const std::vector<Stance> pred{supporting, denying, denying, supporting};
  const auto r = score(truth, pred);
  if (r.macro.f1 != 0.4) out.fail("macro-F1 " + format_fixed(r.macro.f1, 17));

  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> cls(0, 2), len(1, 60);
  for (int set = 0; set < 100; ++set) {
    std::vector<Stance> t, p;
    for (int i = len(rng); i > 0; --i) {
      t.push_back(stance_at(static_cast<std::size_t>(cls(rng))));
      p.push_back(stance_at(static_cast<std::size_t>(cls(rng))));
    }
    const auto s = score(t, p);
    if (s.micro.f1 != s.accuracy()) out.fail("micro-F1 != accuracy on set " + std::to_string(set));
  }

  std::vector<Stance> t(177, supporting), p(177, supporting);
  t.insert(t.end(), 13, questioning);
  p.insert(p.end(), 10, questioning);
  p.insert(p.end(), 3, supporting);
  const auto z = score(t, p);
  const Scores& deny = z.per_class[index_of(denying)];
  if (!(deny.precision_undefined && deny.recall_undefined && deny.f1_undefined)) out.fail("0/0 not flagged");
  if (deny.precision != 0.0 || deny.recall != 0.0 || deny.f1 != 0.0) out.fail("0/0 not scored as 0");
  if (out.pass) out.detail = "macro-F1 0.4, 100 micro==accuracy sets, 177/0/13 flags " + std::to_string(z.undefined.size());
  return out;
}

Outcome pipeline_fixtures() {
  Outcome out;
  const TextResources res = TextResources::load(kData / "stopwords_en.txt", kData / "emoticons.tsv");
  std::ifstream in(kGolden / "preprocess.tsv");
  if (!in) {
    out.fail("missing golden file");
    return out;
  }
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) continue;
    const auto tab = line.find('\t');
    std::string got;
    for (const auto& tok : preprocess(line.substr(0, tab), res)) got += (got.empty() ? "" : " ") + tok;
    if (got != line.substr(tab + 1)) out.fail("golden mismatch: '" + line.substr(0, tab) + "' -> '" + got + "'");
    ++cases;
  }
  const auto make = [](std::string id, std::string text, bool rt) {
    LabeledInstance i;
    i.tweet_id = std::move(id);
    i.text = std::move(text);
    i.is_retweet = rt;
    return i;
  };
  const std::vector<LabeledInstance> tweets{make("1", "original", false), make("2", "RT @bbc: copy", false),
                                            make("3", "flagged", true)};
  const auto train = filter_retweets(tweets, true);
  const auto test = filter_retweets(tweets, false);
  if (train.size() != 1 || train[0].tweet_id != "1") out.fail("training filter kept a retweet");
  if (test.size() != 3) out.fail("test filter dropped tweets");
  if (out.pass) out.detail = std::to_string(cases) + " golden lines, retweets dropped from training only";
  return out;
}

struct RunOutput {
  int code = -1;
  double seconds = 0.0;
  fs::path dir;
};

RunOutput run_into(RunConfig cfg, const fs::path& dir) {
  fs::remove_all(dir);
  cfg.output_dir = dir;
  std::ostringstream out, err;
  const auto start = Clock::now();
  RunOutput r;
  r.code = cmd_run(std::move(cfg), out, err);
  r.seconds = seconds_since(start);
  r.dir = dir;
  if (r.code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return r;
}

// Macro-F1 of the aggregate rows, keyed by (method, k).
std::map<std::pair<std::string, int>, double> aggregate_macro(const fs::path& results) {
  std::map<std::pair<std::string, int>, double> out;
  for (const auto& row : read_csv_rows(results)) {
    if (row.size() > 5 && row[2] == "ALL") out[{row[0], std::stoi(row[1])}] = std::stod(row[5]);
  }
  return out;
}

Outcome harness_structure(const RunOutput& first, const RunConfig& base, const fs::path& scratch) {
  Outcome out;
  if (first.code != 0) {
    out.fail("first run exited " + std::to_string(first.code));
    return out;
  }

  std::map<std::string, std::set<int>> ks;
  for (const auto& row : read_csv_rows(first.dir / "results.csv")) {
    if (row.size() > 2 && row[2] != "ALL") ks[row[0]].insert(std::stoi(row[1]));
  }
  const std::set<int> all{0, 10, 20, 30, 40, 50}, no_zero{10, 20, 30, 40, 50};
  for (const char* m : {"Majority", "NB", "MaxEnt", "GPPooled"}) {
    if (ks[m] != all) out.fail(std::string(m) + " lacks part of the k grid");
  }
  for (const char* m : {"GP", "GPICM"}) {
    if (ks[m] != no_zero) out.fail(std::string(m) + " k grid is not {10..50}");
  }

  // fold -> test ids, identical for every (method, k).
  std::map<std::string, std::set<std::string>> reference;
  std::map<std::tuple<std::string, std::string, std::string>, std::set<std::string>> cells;
  for (const auto& row : read_csv_rows(first.dir / "predictions.csv")) {
    if (row.size() > 3) cells[{row[0], row[1], row[2]}].insert(row[3]);
  }
  for (const auto& [key, ids] : cells) {
    const auto& fold = std::get<2>(key);
    auto [it, fresh] = reference.emplace(fold, ids);
    if (!fresh && it->second != ids) out.fail("test set of fold " + fold + " changes across cells");
  }
  if (reference.size() != 7) out.fail(std::to_string(reference.size()) + " folds instead of 7");

  const RunOutput second = run_into(base, scratch / "rerun");
  if (second.code != 0) out.fail("rerun exited " + std::to_string(second.code));
  for (const char* f : {"results.csv", "predictions.csv"}) {
    if (slurp(first.dir / f) != slurp(second.dir / f)) out.fail(std::string(f) + " differs on rerun");
  }

  RunConfig sep = base;
  sep.corpus = kData / "synthetic" / "separable.jsonl";
  sep.settings.plan.methods = {Method::majority, Method::maxent, Method::gp_icm};
  const RunOutput third = run_into(sep, scratch / "separable");
  if (third.code != 0) {
    out.fail("separable run exited " + std::to_string(third.code));
    return out;
  }
  const auto macro = aggregate_macro(third.dir / "results.csv");
  double low = 1.0;
  for (int k : no_zero) {
    const double floor = macro.at({"Majority", k});
    for (const char* m : {"MaxEnt", "GPICM"}) {
      const double v = macro.at({m, k});
      low = std::min(low, v);
      if (v < 0.95 || v <= floor) out.fail(std::string(m) + " macro-F1 " + fmt(v) + " at k=" + std::to_string(k));
    }
  }
  const double zero = macro.at({"MaxEnt", 0});
  if (zero < 0.95 || zero <= macro.at({"Majority", 0})) out.fail("MaxEnt macro-F1 " + fmt(zero) + " at k=0");
  low = std::min(low, zero);
  if (out.pass) {
    out.detail = "full grid, fixed test sets over 7 folds, byte-identical rerun, separable min macro-F1 " + fmt(low) +
                 " vs Majority " + fmt(macro.at({"Majority", 10}));
  }
  return out;
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  const auto guard = [](const std::function<Outcome()>& check) {
    try {
      return check();
    } catch (const std::exception& e) {
      Outcome o;
      o.fail(std::string("exception: ") + e.what());
      return o;
    }
  };

  report(1, "ep-vs-oracle", guard(ep_matches_oracle));
  report(2, "gradient-check", guard(gradients_match_differences));
  report(3, "kernel-psd", guard(grams_are_psd));
  report(4, "task-block-independence", guard(icm_blocks_are_independent));
  report(5, "evaluation-exactness", guard(evaluation_is_exact));

  const fs::path scratch = fs::temp_directory_path() / "stancekit-acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  RunConfig base;
  RunOutput desk;
  Outcome desk_outcome;
  try {
    base = RunConfig::load(kData / "synthetic" / "run_config.json");
    desk = run_into(base, scratch / "desk");
  } catch (const std::exception& e) {
    desk_outcome.fail(std::string("exception: ") + e.what());
  }

  report(6, "harness-structure", guard([&] { return harness_structure(desk, base, scratch); }));
  report(7, "pipeline-fixtures", guard(pipeline_fixtures));

  if (desk_outcome.pass) {
    if (desk.code != 0) desk_outcome.fail("exit code " + std::to_string(desk.code));
    if (desk.seconds >= 300.0) desk_outcome.fail("took " + fmt(desk.seconds) + " s");
    if (desk_outcome.pass) desk_outcome.detail = "exit 0 in " + fmt(desk.seconds) + " s";
  }
  report(8, "desk-run", desk_outcome);

  fs::remove_all(scratch);
  return failures == 0 ? 0 : 1;
}
