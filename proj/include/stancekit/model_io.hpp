#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "stancekit/experiments.hpp"
#include "stancekit/multiclass.hpp"

namespace stancekit {

inline constexpr const char* kModelMagic = "stancekit-model";
inline constexpr int kModelFormatVersion = 1;

// How raw text was turned into the model's inputs. Paths are recorded as
// given at training time; digests pin the file contents.
struct FeatureSpec {
  FeatureKind kind = FeatureKind::brown;
  std::vector<std::string> vocabulary;  // BOW only, in index order
  std::string brown_path;
  std::string brown_digest;
  std::string stopword_path;
  std::string stopword_digest;
  std::string emoticon_path;
  std::string emoticon_digest;
  bool remove_urls = true;
  // Which corpus field names a tweet's task.
  FoldUnit task_unit = FoldUnit::rumour;
};

struct SavedModel {
  StanceModel model;
  FeatureSpec features;
};

// JSON container: magic, format version, feature spec, fit config, and per
// class the kernel, the training inputs and the EP site parameters. Doubles
// are written in shortest round-trip form, so a reloaded model predicts
// bit-identically.
void save_model(std::ostream& out, const StanceModel& model, const FeatureSpec& features);
void save_model(const std::filesystem::path& path, const StanceModel& model, const FeatureSpec& features);

// Throws ConfigError on a wrong magic, an unsupported format version or
// malformed content.
SavedModel load_model(std::istream& in, const std::string& source);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace stancekit
