#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "stancekit/model_io.hpp"
#include "stancekit/run_config.hpp"

namespace stancekit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
// The run finished but at least one fold was skipped or a cell failed.
inline constexpr int kExitPartial = 2;

struct IngestOptions {
  std::filesystem::path corpus;
  CorpusReadOptions read;
  // Also write the parsed corpus as canonical JSONL.
  std::optional<std::filesystem::path> normalized_output;
};

// Prints the per-rumour label table. Parse errors are fatal unless
// read.lenient, in which case they go to `err` and the rest is counted.
int cmd_ingest(const IngestOptions& options, std::ostream& out, std::ostream& err);

// Runs the experiment and writes results.csv, report.json,
// predictions.csv, timings.csv and config.json (the resolved snapshot)
// into config.output_dir. STANCEKIT_SEED replaces the configured seed.
int cmd_run(RunConfig config, std::ostream& out, std::ostream& err);

struct TrainOptions {
  // Corpus, resources, features, fit/optimizer settings and seed; the
  // plan's fold_unit decides the task key.
  RunConfig config;
  MethodVariant variant = MethodVariant::gp_icm;
  std::optional<std::string> target;
  std::filesystem::path model_output;
};

// Fits one model on every labelled, non-retweet tweet and saves it.
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);

struct PredictOptions {
  std::filesystem::path model;
  // Tweets to label; "-" reads standard input.
  std::filesystem::path input = "-";
  CorpusReadOptions read;
  // Replace the resource paths recorded in the model; contents must still
  // match the recorded digests.
  std::optional<std::filesystem::path> brown_clusters;
  std::optional<std::filesystem::path> stopwords;
  std::optional<std::filesystem::path> emoticons;
};

// CSV rows tweet_id,label,p_supporting,p_denying,p_questioning after a
// header; nothing at all for an input without tweets.
int cmd_predict(const PredictOptions& options, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace stancekit
