#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "stancekit/corpus_io.hpp"
#include "stancekit/experiments.hpp"

namespace stancekit {

// Everything a `run` needs. Relative paths in a config file are resolved
// against the file's directory.
struct RunConfig {
  std::filesystem::path corpus;
  CorpusReadOptions corpus_options;
  std::filesystem::path brown_clusters;
  std::filesystem::path stopwords;
  std::filesystem::path emoticons;
  bool remove_urls = true;
  std::filesystem::path output_dir;
  RunSettings settings;

  // Bundled stopword and emoticon tables, Brown features, default plan,
  // one job per core.
  static RunConfig defaults();

  // Unknown keys are rejected. Throws ConfigError naming the key.
  static RunConfig from_json(const std::string& text, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  // Every referenced file exists, the plan and fit settings are valid and
  // Brown features have a cluster file. Throws ConfigError.
  void validate() const;

  // Resolved config with absolute paths; from_json reads it back to the
  // same settings (jobs excepted, which never changes results). `digests`
  // maps file roles to SHA-256 and is stored for reference only.
  std::string snapshot_json(const std::map<std::string, std::string>& digests = {}) const;
};

// STANCEKIT_SEED, when set to an unsigned integer, replaces the config seed.
// Throws ConfigError for any other value.
std::optional<std::uint64_t> seed_from_environment();

}  // namespace stancekit
