// stancekit command-line entry point: ingest, run, train, predict.
#include <iostream>

#include <CLI11.hpp>

#include "stancekit/commands.hpp"
#include "stancekit/errors.hpp"

namespace {

using namespace stancekit;

bool flag_given(const CLI::App* app, const char* flag) {
  const CLI::Option* o = app->get_option_no_throw(flag);
  return o != nullptr && o->count() > 0;
}

// Corpus reading flags shared by every subcommand.
struct CorpusFlags {
  std::string format;
  ColumnMapping columns;
  bool lenient = false;

  void attach(CLI::App* app) {
    app->add_option("--format", format, "Corpus format (default: from the file extension)")
        ->check(CLI::IsMember({"jsonl", "csv"}));
    app->add_option("--col-id", columns.tweet_id, "Field holding the tweet id");
    app->add_option("--col-text", columns.text, "Field holding the tweet text");
    app->add_option("--col-rumour", columns.rumour_id, "Field holding the rumour id");
    app->add_option("--col-event", columns.event_id, "Field holding the event id");
    app->add_option("--col-label", columns.label, "Field holding the stance label");
    app->add_option("--col-order", columns.order, "Field holding the temporal order");
    app->add_option("--col-retweet", columns.retweet, "Field holding the retweet flag");
    app->add_flag("--lenient", lenient, "Skip malformed rows instead of failing");
  }

  void apply(CorpusReadOptions& read, const CLI::App* app) const {
    if (!format.empty()) read.format = format == "csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
    auto given = [&](const char* flag) { return flag_given(app, flag); };
    ColumnMapping& c = read.columns;
    if (given("--col-id")) c.tweet_id = columns.tweet_id;
    if (given("--col-text")) c.text = columns.text;
    if (given("--col-rumour")) c.rumour_id = columns.rumour_id;
    if (given("--col-event")) c.event_id = columns.event_id;
    if (given("--col-label")) c.label = columns.label;
    if (given("--col-order")) c.order = columns.order;
    if (given("--col-retweet")) c.retweet = columns.retweet;
    if (lenient) read.lenient = true;
  }
};

// Flags mirroring RunConfig; each one overrides the config file.
struct ConfigFlags {
  std::string config_file;
  std::string corpus, brown, stopwords, emoticons, output, features, protocol, fold_unit;
  std::vector<int> sizes;
  std::vector<std::string> methods;
  int test_offset = 0;
  std::uint64_t seed = 0;
  int max_iters = 0, restarts = 0, ep_max_sweeps = 0;
  double ep_tolerance = 0, jitter = 0;
  bool keep_urls = false, no_optimize = false;
  CorpusFlags corpus_flags;

  void attach(CLI::App* app, bool experiment) {
    app->add_option("-c,--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--corpus", corpus, "Corpus file (JSONL or CSV)");
    app->add_option("--brown", brown, "Brown cluster paths file");
    app->add_option("--stopwords", stopwords, "Stopword list");
    app->add_option("--emoticons", emoticons, "Emoticon table");
    app->add_flag("--keep-urls", keep_urls, "Do not strip URLs");
    app->add_option("--features", features, "brown or bow")->check(CLI::IsMember({"brown", "bow"}));
    app->add_option("--fold-unit", fold_unit, "rumour or event")->check(CLI::IsMember({"rumour", "event"}));
    app->add_option("--seed", seed, "Random seed (STANCEKIT_SEED takes precedence)");
    app->add_option("--max-iters", max_iters, "L-BFGS iterations per restart");
    app->add_option("--restarts", restarts, "Hyperparameter search restarts");
    app->add_option("--ep-tolerance", ep_tolerance, "EP convergence tolerance");
    app->add_option("--ep-max-sweeps", ep_max_sweeps, "EP sweep limit");
    app->add_option("--jitter", jitter, "Gram diagonal jitter");
    app->add_flag("--no-optimize", no_optimize, "Keep kernel hyperparameters at their initial values");
    if (experiment) {
      app->add_option("-o,--output", output, "Output directory");
      app->add_option("--protocol", protocol, "LOO or LPO")->check(CLI::IsMember({"LOO", "LPO"}, CLI::ignore_case));
      app->add_option("--sizes", sizes, "Target training sizes k")->delimiter(',');
      app->add_option("--test-offset", test_offset, "First test position in the target unit");
      app->add_option("--methods", methods, "Methods to run")->delimiter(',');
    }
    corpus_flags.attach(app);
  }

  RunConfig resolve(const CLI::App* app) const {
    RunConfig c = config_file.empty() ? RunConfig::defaults() : RunConfig::load(config_file);
    auto given = [&](const char* flag) { return flag_given(app, flag); };
    if (given("--corpus")) c.corpus = corpus;
    if (given("--brown")) c.brown_clusters = brown;
    if (given("--stopwords")) c.stopwords = stopwords;
    if (given("--emoticons")) c.emoticons = emoticons;
    if (keep_urls) c.remove_urls = false;
    if (given("--features")) c.settings.features = *parse_feature_kind(features);
    if (given("--fold-unit")) c.settings.plan.fold_unit = *parse_fold_unit(fold_unit);
    if (given("--seed")) c.settings.plan.seed = seed;
    TrainingConfig& t = c.settings.training;
    if (given("--max-iters")) t.optimizer.max_iters = max_iters;
    if (given("--restarts")) t.optimizer.restarts = restarts;
    if (given("--ep-tolerance")) t.fit.ep_tolerance = ep_tolerance;
    if (given("--ep-max-sweeps")) t.fit.ep_max_sweeps = ep_max_sweeps;
    if (given("--jitter")) t.fit.jitter = jitter;
    if (no_optimize) t.optimize = false;
    if (given("--output")) c.output_dir = output;
    if (given("--protocol")) c.settings.plan.protocol = *parse_protocol(protocol);
    if (given("--sizes")) c.settings.plan.target_train_sizes = sizes;
    if (given("--test-offset")) c.settings.plan.test_offset = test_offset;
    if (given("--methods")) {
      c.settings.plan.methods.clear();
      for (const auto& m : methods) {
        const auto parsed = parse_method(m);
        if (!parsed) throw ConfigError("unknown method '" + m + "'");
        c.settings.plan.methods.push_back(*parsed);
      }
    }
    corpus_flags.apply(c.corpus_options, app);
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stance classification of rumour tweets with multi-task Gaussian processes"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Parse a corpus and print per-rumour label counts");
  std::string ingest_path, normalized;
  CorpusFlags ingest_flags;
  ingest->add_option("corpus", ingest_path, "Corpus file")->required();
  ingest->add_option("--write-jsonl", normalized, "Also write the parsed corpus as canonical JSONL");
  ingest_flags.attach(ingest);

  auto* run = app.add_subcommand("run", "Run a leave-one-out / leave-part-out experiment");
  ConfigFlags run_flags;
  run_flags.attach(run, true);
  int jobs = 1;
  run->add_option("-j,--jobs", jobs, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "Train a GP stance model and save it");
  ConfigFlags train_flags;
  train_flags.attach(train, false);
  std::string method = "GPICM", target, model_out;
  train->add_option("--method", method, "GP, GPPooled or GPICM")->check(CLI::IsMember({"GP", "GPPooled", "GPICM"}));
  train->add_option("--target", target, "Target rumour (or event) id");
  train->add_option("-m,--model", model_out, "Model file to write")->required();

  auto* predict = app.add_subcommand("predict", "Label tweets with a saved model");
  PredictOptions predict_opts;
  std::string model_in, input = "-", p_brown, p_stop, p_emo;
  CorpusFlags predict_flags;
  predict->add_option("-m,--model", model_in, "Saved model")->required()->check(CLI::ExistingFile);
  predict->add_option("-i,--input", input, "Tweets to label (JSONL or CSV; '-' for stdin)");
  predict->add_option("--brown", p_brown, "Brown cluster file (default: path stored in the model)");
  predict->add_option("--stopwords", p_stop, "Stopword list (default: path stored in the model)");
  predict->add_option("--emoticons", p_emo, "Emoticon table (default: path stored in the model)");
  predict_flags.attach(predict);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the fatal exit code; --help exits 0.
    return app.exit(e) == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (*ingest) {
      IngestOptions o;
      o.corpus = ingest_path;
      ingest_flags.apply(o.read, ingest);
      if (!normalized.empty()) o.normalized_output = normalized;
      return cmd_ingest(o, std::cout, std::cerr);
    }
    if (*run) {
      RunConfig c = run_flags.resolve(run);
      if (run->count("--jobs") > 0) c.settings.jobs = jobs;
      return cmd_run(std::move(c), std::cout, std::cerr);
    }
    if (*train) {
      TrainOptions o;
      o.config = train_flags.resolve(train);
      o.variant = *parse_method_variant(method);
      if (!target.empty()) o.target = target;
      o.model_output = model_out;
      return cmd_train(o, std::cout, std::cerr);
    }
    if (*predict) {
      predict_opts.model = model_in;
      predict_opts.input = input;
      predict_flags.apply(predict_opts.read, predict);
      if (!p_brown.empty()) predict_opts.brown_clusters = p_brown;
      if (!p_stop.empty()) predict_opts.stopwords = p_stop;
      if (!p_emo.empty()) predict_opts.emoticons = p_emo;
      return cmd_predict(predict_opts, std::cin, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}
