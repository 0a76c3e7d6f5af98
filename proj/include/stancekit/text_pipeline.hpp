#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stancekit/corpus.hpp"
#include "stancekit/sparse_vector.hpp"

namespace stancekit {

// Porter stemmer. Words containing anything but a-z are returned as is.
std::string porter_stem(std::string_view word);

// Collapses every run of 3+ identical characters to exactly two.
std::string squash_repeats(std::string_view token);

// squash + stem, iterated until the token stops changing (the Porter
// stemmer alone is not idempotent: agreed -> agre -> agr).
std::string normalize_token(std::string_view token);

// The form preprocess() gives a single plain word: lower-cased, apostrophes
// dropped, normalized. Used to rekey Brown tables built on raw words.
std::string canonical_word(std::string_view word);

struct TextResources {
  std::unordered_set<std::string> stopwords;
  // Lower-cased emoticon -> replacement word.
  std::unordered_map<std::string, std::string> emoticons;
  bool remove_urls = true;
  std::string stopword_digest;
  std::string emoticon_digest;

  // Stopword file: one token per line, '#' comments. Entries are
  // lower-cased and apostrophes are dropped to match tokenization.
  static std::unordered_set<std::string> parse_stopwords(std::string_view content);
  // Emoticon file: `emoticon<TAB>replacement` per line, '#' comments.
  // Throws ParseError naming the line on malformed rows.
  static std::unordered_map<std::string, std::string> parse_emoticons(std::string_view content,
                                                                      const std::string& source);
  static TextResources load(const std::filesystem::path& stopword_file, const std::filesystem::path& emoticon_file);
};

// Lowercase, split on whitespace, replace emoticons, drop @usernames and
// URLs, detach punctuation (runs of . ! ? stay as tokens, anything else
// separates words; apostrophes are deleted in place), drop stopwords, then
// normalize_token each word.
std::vector<std::string> preprocess(std::string_view text, const TextResources& resources);

// Token -> feature index table; indices follow insertion order.
class Vocabulary {
 public:
  std::optional<std::int32_t> find(std::string_view token) const;
  std::int32_t add(const std::string& token);
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocabulary from_tokens(std::vector<std::string> tokens);

 private:
  std::unordered_map<std::string, std::int32_t> index_;
  std::vector<std::string> tokens_;
};

// Counts per vocabulary index. With grow = false unseen tokens are dropped.
SparseFeatureVector encode_bow(std::span<const std::string> tokens, Vocabulary& vocab, bool grow);
SparseFeatureVector encode_bow(std::span<const std::string> tokens, const Vocabulary& vocab);

// Brown cluster paths file: `bitstring<TAB>word<TAB>count` per line. Each
// distinct bitstring becomes a cluster id in order of first appearance.
class BrownClusterTable {
 public:
  static constexpr std::size_t kMaxClusters = 1000;

  struct Entry {
    std::string bitstring;
    std::string word;
    std::int64_t count = 0;
    int cluster = 0;
  };

  // Throws ParseError for malformed lines or repeated words and
  // ConfigError past kMaxClusters.
  static BrownClusterTable parse(std::string_view content, const std::string& source);
  static BrownClusterTable load(const std::filesystem::path& path);

  std::optional<int> cluster_of(std::string_view word) const;
  std::size_t cluster_count() const { return bitstrings_.size(); }
  std::size_t word_count() const { return entries_.size(); }
  const std::vector<std::string>& bitstrings() const { return bitstrings_; }
  const std::vector<Entry>& entries() const { return entries_; }
  // SHA-256 of the source bytes.
  const std::string& digest() const { return digest_; }

  // Writes the entries back in file order.
  void write(std::ostream& out) const;

  // Same clusters keyed by rewrite(word). When two words collide the first
  // one in file order wins; the digest stays that of the source file.
  BrownClusterTable rekeyed(const std::function<std::string(std::string_view)>& rewrite) const;

 private:
  std::vector<Entry> entries_;
  std::vector<std::string> bitstrings_;
  std::unordered_map<std::string, int> lookup_;
  std::string digest_;
};

// Tokens without a cluster are dropped.
SparseFeatureVector encode_brown(std::span<const std::string> tokens, const BrownClusterTable& table);

bool looks_like_retweet(const LabeledInstance& instance);

// With training = true drops retweets (flagged, or text starting "RT @");
// otherwise returns the input unchanged.
std::vector<LabeledInstance> filter_retweets(std::vector<LabeledInstance> instances, bool training);

}  // namespace stancekit
