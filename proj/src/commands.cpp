#include "stancekit/commands.hpp"

#include <fstream>
#include <iostream>

#include "stancekit/digest.hpp"
#include "stancekit/errors.hpp"

namespace stancekit {
namespace {

TextResources load_resources(const std::filesystem::path& stopwords, const std::filesystem::path& emoticons,
                             bool remove_urls) {
  TextResources r = TextResources::load(stopwords, emoticons);
  r.remove_urls = remove_urls;
  return r;
}

// Brown tables are built on raw words; key them by the pipeline's forms.
BrownClusterTable load_brown(const std::filesystem::path& path) {
  return BrownClusterTable::load(path).rekeyed([](std::string_view w) { return canonical_word(w); });
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ConfigError("cannot write " + path.string());
}

template <typename Writer>
void write_with(const std::filesystem::path& path, Writer writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  writer(out);
  if (!out) throw ConfigError("failed writing " + path.string());
}

void report_lenient(const CorpusReadResult& read, std::ostream& err) {
  for (const auto& e : read.errors) err << "warning: skipped " << e << '\n';
}

template <typename Fn>
int guarded(std::ostream& err, Fn fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFatal;
  }
}

}  // namespace

int cmd_ingest(const IngestOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const CorpusReadResult read = load_corpus(options.corpus, options.read);
    report_lenient(read, err);
    const auto rows = count_by_rumour(read.instances);
    write_counts_table(out, rows);
    std::int64_t unlabelled = 0;
    for (const auto& r : rows) unlabelled += r.unlabelled;
    if (unlabelled > 0) err << "note: " << unlabelled << " tweets have no stance label\n";
    if (options.normalized_output) {
      write_with(*options.normalized_output, [&](std::ostream& o) { write_corpus_jsonl(o, read.instances); });
    }
    return kExitOk;
  });
}

int cmd_run(RunConfig config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (const auto seed = seed_from_environment()) config.settings.plan.seed = *seed;
    config.validate();
    CorpusReadOptions read = config.corpus_options;
    read.require_labels = true;
    const CorpusReadResult corpus = load_corpus(config.corpus, read);
    report_lenient(corpus, err);
    const TextResources resources = load_resources(config.stopwords, config.emoticons, config.remove_urls);
    std::optional<BrownClusterTable> brown;
    if (config.settings.features == FeatureKind::brown) brown = load_brown(config.brown_clusters);

    ExperimentResult result = run_experiment(corpus.instances, config.settings, resources, brown ? &*brown : nullptr);
    for (const auto& e : corpus.errors) result.warnings.push_back("skipped corpus row " + e);

    std::filesystem::create_directories(config.output_dir);
    std::map<std::string, std::string> digests{{"corpus", sha256_hex(read_file(config.corpus))},
                                               {"stopwords", resources.stopword_digest},
                                               {"emoticons", resources.emoticon_digest}};
    if (brown) digests["brown_clusters"] = brown->digest();
    write_file(config.output_dir / "config.json", config.snapshot_json(digests));
    write_with(config.output_dir / "results.csv", [&](std::ostream& o) { write_results_csv(o, result); });
    write_with(config.output_dir / "predictions.csv", [&](std::ostream& o) { write_predictions_csv(o, result); });
    write_with(config.output_dir / "timings.csv", [&](std::ostream& o) { write_timings_csv(o, result); });
    write_file(config.output_dir / "report.json", experiment_report_json(result));

    out << "method,k,folds,micro_f1,macro_f1\n";
    for (const auto& row : result.aggregates) {
      out << to_string(row.method) << ',' << row.k << ',' << row.folds << ',' << format_fixed(row.report.micro.f1, 4)
          << ',' << format_fixed(row.report.macro.f1, 4) << '\n';
    }
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    err << "results written to " << config.output_dir.string() << '\n';
    return result.skipped_folds.empty() && result.failed_cells == 0 ? kExitOk : kExitPartial;
  });
}

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = options.config;
    if (const auto seed = seed_from_environment()) config.settings.plan.seed = *seed;
    config.validate();
    const CorpusReadResult corpus = load_corpus(config.corpus, config.corpus_options);
    report_lenient(corpus, err);
    const TextResources resources = load_resources(config.stopwords, config.emoticons, config.remove_urls);

    FeatureSpec spec;
    spec.kind = config.settings.features;
    spec.stopword_path = std::filesystem::absolute(config.stopwords).string();
    spec.stopword_digest = resources.stopword_digest;
    spec.emoticon_path = std::filesystem::absolute(config.emoticons).string();
    spec.emoticon_digest = resources.emoticon_digest;
    spec.remove_urls = config.remove_urls;
    spec.task_unit = config.settings.plan.fold_unit;

    std::vector<const LabeledInstance*> kept;
    std::size_t unlabelled = 0;
    for (const auto& inst : corpus.instances) {
      if (!inst.label) {
        ++unlabelled;
      } else if (!looks_like_retweet(inst)) {
        kept.push_back(&inst);
      }
    }
    if (unlabelled > 0) err << "note: ignoring " << unlabelled << " unlabelled tweets\n";
    std::vector<std::vector<std::string>> tokens;
    for (const auto* inst : kept) tokens.push_back(preprocess(inst->text, resources));

    std::optional<BrownClusterTable> brown;
    Featurizer featurizer;
    if (spec.kind == FeatureKind::brown) {
      brown = load_brown(config.brown_clusters);
      spec.brown_path = std::filesystem::absolute(config.brown_clusters).string();
      spec.brown_digest = brown->digest();
      featurizer = Featurizer::brown(*brown);
    } else {
      std::vector<const std::vector<std::string>*> seen;
      for (const auto& t : tokens) seen.push_back(&t);
      featurizer = Featurizer::bow(seen);
      spec.vocabulary = featurizer.vocabulary().tokens();
    }
    std::vector<StanceExample> train;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      train.push_back({featurizer.encode(tokens[i]), fold_key(*kept[i], spec.task_unit), *kept[i]->label});
    }
    TrainingConfig cfg = config.settings.training;
    cfg.optimizer.seed = config.settings.plan.seed;
    const StanceModel model = train_stance_model(train, options.variant, options.target, cfg);
    for (Stance s : kAllStances) {
      for (const auto& w : model.classifier(s).warnings) err << "warning: " << w << '\n';
    }
    save_model(options.model_output, model, spec);
    out << "trained " << to_string(options.variant) << " on " << train.size() << " tweets, " << model.task_keys().size()
        << " task(s), target " << model.task_keys()[static_cast<std::size_t>(model.target_task())] << '\n';
    for (Stance s : kAllStances) {
      out << "  " << to_string(s) << ": log evidence " << format_fixed(model.classifier(s).log_evidence, 4) << '\n';
    }
    return kExitOk;
  });
}

int cmd_predict(const PredictOptions& options, std::istream& in, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SavedModel saved = load_model(options.model);
    const FeatureSpec& spec = saved.features;
    auto check = [](const std::string& what, const std::string& expected, const std::string& got) {
      if (expected != got) throw ConfigError(what + " differs from the one the model was trained with");
    };
    const TextResources resources =
        load_resources(options.stopwords.value_or(spec.stopword_path), options.emoticons.value_or(spec.emoticon_path),
                       spec.remove_urls);
    check("stopword file", spec.stopword_digest, resources.stopword_digest);
    check("emoticon file", spec.emoticon_digest, resources.emoticon_digest);
    std::optional<BrownClusterTable> brown;
    Featurizer featurizer;
    if (spec.kind == FeatureKind::brown) {
      brown = load_brown(options.brown_clusters.value_or(spec.brown_path));
      check("Brown cluster file", spec.brown_digest, brown->digest());
      featurizer = Featurizer::brown(*brown);
    } else {
      featurizer = Featurizer::bow(Vocabulary::from_tokens(spec.vocabulary));
    }

    CorpusReadOptions read = options.read;
    read.require_rumour = false;
    CorpusReadResult tweets;
    if (options.input == "-") {
      tweets = read_tweets(in, "<stdin>", read);
    } else {
      std::ifstream file(options.input, std::ios::binary);
      if (!file) throw ConfigError("cannot open " + options.input.string());
      tweets = read_tweets(file, options.input.string(), read);
    }
    report_lenient(tweets, err);
    if (tweets.instances.empty()) return kExitOk;
    out << "tweet_id,label,p_supporting,p_denying,p_questioning\n";
    for (const auto& inst : tweets.instances) {
      const StancePrediction p =
          saved.model.predict(featurizer.encode(preprocess(inst.text, resources)), fold_key(inst, spec.task_unit));
      out << inst.tweet_id << ',' << to_string(p.label);
      for (double prob : p.probabilities) out << ',' << format_fixed(prob, 9);
      out << '\n';
    }
    return kExitOk;
  });
}

}  // namespace stancekit
