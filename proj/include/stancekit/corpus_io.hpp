#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stancekit/corpus.hpp"

namespace stancekit {

enum class CorpusFormat { jsonl, csv };

// Field (JSONL) or header column (CSV) holding each attribute.
struct ColumnMapping {
  std::string tweet_id = "tweet_id";
  std::string text = "text";
  std::string rumour_id = "rumour_id";
  std::string event_id = "event_id";
  std::string label = "label";
  std::string order = "order_index";
  std::string retweet = "is_retweet";
};

struct CorpusReadOptions {
  // Inferred from the extension (.csv, otherwise JSONL) when unset.
  std::optional<CorpusFormat> format;
  ColumnMapping columns;
  // Skip malformed rows, collecting their errors, instead of throwing.
  bool lenient = false;
  // Rows without a label are errors.
  bool require_labels = false;
  // With false a missing rumour id reads as empty.
  bool require_rumour = true;
};

struct CorpusReadResult {
  std::vector<LabeledInstance> instances;
  // "source:line: message" for each row skipped under lenient reading.
  std::vector<std::string> errors;
};

// Rows need tweet_id, text and rumour_id. event_id, label and the retweet
// flag may be absent or null; a missing order value means "next in file
// order within the rumour". Tweet ids must be unique, and so must order
// values within a rumour. Throws ParseError with the line number, or
// ConfigError("...: empty corpus") when no rows remain.
CorpusReadResult read_corpus(std::istream& in, const std::string& source, const CorpusReadOptions& options);
CorpusReadResult load_corpus(const std::filesystem::path& path, const CorpusReadOptions& options);

// Like read_corpus but an input without rows is an empty result.
CorpusReadResult read_tweets(std::istream& in, const std::string& source, const CorpusReadOptions& options);

struct RumourCounts {
  std::string rumour;
  std::array<std::int64_t, 3> by_stance{};
  std::int64_t unlabelled = 0;
  std::int64_t total = 0;
};

// One row per rumour in name order.
std::vector<RumourCounts> count_by_rumour(std::span<const LabeledInstance> corpus);

// rumour,supporting,denying,questioning,total plus a final TOTAL row.
void write_counts_table(std::ostream& out, std::span<const RumourCounts> rows);

void write_corpus_jsonl(std::ostream& out, std::span<const LabeledInstance> corpus);

}  // namespace stancekit
