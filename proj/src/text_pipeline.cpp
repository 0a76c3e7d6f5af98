#include "stancekit/text_pipeline.hpp"

#include <algorithm>

#include "stancekit/digest.hpp"
#include "stancekit/errors.hpp"

namespace stancekit {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

char ascii_lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

bool kept_punctuation(char c) { return c == '.' || c == '!' || c == '?'; }

// ASCII letters and digits, plus every byte of a multi-byte UTF-8 sequence.
bool word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || u >= 0x80;
}

constexpr std::string_view kCurlyApostrophe = "\xE2\x80\x99";

bool is_url(std::string_view t) { return t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www."); }

// Splits one whitespace token into words and kept-punctuation runs.
void detach_punctuation(std::string_view token, std::vector<std::string>& out) {
  std::string word;
  std::string marks;
  auto flush_word = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  auto flush_marks = [&] {
    if (!marks.empty()) out.push_back(std::move(marks));
    marks.clear();
  };
  for (std::size_t i = 0; i < token.size(); ++i) {
    const char c = token[i];
    if (c == '\'') continue;
    if (token.substr(i).starts_with(kCurlyApostrophe)) {
      i += kCurlyApostrophe.size() - 1;
      continue;
    }
    if (word_byte(c)) {
      flush_marks();
      word.push_back(c);
    } else if (kept_punctuation(c)) {
      flush_word();
      marks.push_back(c);
    } else {
      flush_word();
      flush_marks();
    }
  }
  flush_word();
  flush_marks();
}

std::string strip_apostrophes(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\'') continue;
    if (s.substr(i).starts_with(kCurlyApostrophe)) {
      i += kCurlyApostrophe.size() - 1;
      continue;
    }
    out.push_back(s[i]);
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

template <class F>
void for_each_line(std::string_view content, F&& f) {
  std::size_t line_no = 0;
  while (!content.empty()) {
    const std::size_t nl = content.find('\n');
    std::string_view line = content.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    f(++line_no, line);
    if (nl == std::string_view::npos) break;
    content.remove_prefix(nl + 1);
  }
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

}  // namespace

std::string squash_repeats(std::string_view token) {
  std::string out;
  for (char c : token) {
    if (out.size() >= 2 && out[out.size() - 1] == c && out[out.size() - 2] == c) continue;
    out.push_back(c);
  }
  return out;
}

std::string normalize_token(std::string_view token) {
  std::string current(token);
  while (true) {
    std::string next = porter_stem(squash_repeats(current));
    if (next == current) return current;
    current = std::move(next);
  }
}

std::string canonical_word(std::string_view word) { return normalize_token(strip_apostrophes(lowercase(word))); }

std::unordered_set<std::string> TextResources::parse_stopwords(std::string_view content) {
  std::unordered_set<std::string> out;
  for_each_line(content, [&](std::size_t, std::string_view line) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') return;
    out.insert(strip_apostrophes(lowercase(t)));
  });
  return out;
}

std::unordered_map<std::string, std::string> TextResources::parse_emoticons(std::string_view content,
                                                                            const std::string& source) {
  std::unordered_map<std::string, std::string> out;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty() || line.front() == '#') return;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(source, line_no, "expected emoticon<TAB>replacement");
    const std::string key = lowercase(trim(line.substr(0, tab)));
    const std::string value = lowercase(trim(line.substr(tab + 1)));
    if (key.empty() || value.empty()) throw ParseError(source, line_no, "empty emoticon or replacement");
    out.emplace(key, value);  // first entry wins after lower-casing (:S and :s)
  });
  return out;
}

TextResources TextResources::load(const std::filesystem::path& stopword_file,
                                  const std::filesystem::path& emoticon_file) {
  TextResources r;
  const std::string stop = read_file(stopword_file);
  const std::string emo = read_file(emoticon_file);
  r.stopwords = parse_stopwords(stop);
  r.emoticons = parse_emoticons(emo, emoticon_file.string());
  r.stopword_digest = sha256_hex(stop);
  r.emoticon_digest = sha256_hex(emo);
  return r;
}

std::vector<std::string> preprocess(std::string_view text, const TextResources& resources) {
  const std::string lowered = lowercase(text);
  std::vector<std::string> pieces;
  std::string_view rest = lowered;
  while (!rest.empty()) {
    std::size_t b = 0;
    while (b < rest.size() && is_space(rest[b])) ++b;
    std::size_t e = b;
    while (e < rest.size() && !is_space(rest[e])) ++e;
    if (e > b) pieces.emplace_back(rest.substr(b, e - b));
    rest.remove_prefix(e);
  }

  std::vector<std::string> words;
  for (const std::string& piece : pieces) {
    if (const auto it = resources.emoticons.find(piece); it != resources.emoticons.end()) {
      words.push_back(it->second);
      continue;
    }
    if (piece.front() == '@') continue;
    if (resources.remove_urls && is_url(piece)) continue;
    detach_punctuation(piece, words);
  }

  std::vector<std::string> out;
  for (const std::string& w : words) {
    if (resources.stopwords.contains(w)) continue;
    out.push_back(normalize_token(w));
  }
  return out;
}

std::optional<std::int32_t> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::int32_t Vocabulary::add(const std::string& token) {
  const auto [it, inserted] = index_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  for (const auto& t : tokens) {
    if (v.find(t)) throw ConfigError("duplicate vocabulary token '" + t + "'");
    v.add(t);
  }
  return v;
}

SparseFeatureVector encode_bow(std::span<const std::string> tokens, Vocabulary& vocab, bool grow) {
  if (!grow) return encode_bow(tokens, static_cast<const Vocabulary&>(vocab));
  std::vector<std::int32_t> ids;
  for (const auto& t : tokens) ids.push_back(vocab.add(t));
  return SparseFeatureVector::from_indices(ids);
}

SparseFeatureVector encode_bow(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::vector<std::int32_t> ids;
  for (const auto& t : tokens) {
    if (const auto id = vocab.find(t)) ids.push_back(*id);
  }
  return SparseFeatureVector::from_indices(ids);
}

BrownClusterTable BrownClusterTable::parse(std::string_view content, const std::string& source) {
  BrownClusterTable table;
  table.digest_ = sha256_hex(content);
  std::unordered_map<std::string, int> cluster_ids;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos) {
      throw ParseError(source, line_no, "expected bitstring<TAB>word<TAB>count");
    }
    Entry e;
    e.bitstring = std::string(line.substr(0, t1));
    e.word = std::string(line.substr(t1 + 1, t2 - t1 - 1));
    const std::string count(line.substr(t2 + 1));
    if (e.bitstring.empty() || e.bitstring.find_first_not_of("01") != std::string::npos) {
      throw ParseError(source, line_no, "cluster path must be a non-empty bitstring");
    }
    if (e.word.empty()) throw ParseError(source, line_no, "empty word");
    if (count.empty() || count.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError(source, line_no, "count must be a non-negative integer");
    }
    e.count = std::stoll(count);
    const auto [it, fresh] = cluster_ids.emplace(e.bitstring, static_cast<int>(table.bitstrings_.size()));
    if (fresh) {
      if (table.bitstrings_.size() == kMaxClusters) {
        throw ConfigError(source + ": more than " + std::to_string(kMaxClusters) + " distinct clusters");
      }
      table.bitstrings_.push_back(e.bitstring);
    }
    e.cluster = it->second;
    if (!table.lookup_.emplace(e.word, e.cluster).second) {
      throw ParseError(source, line_no, "word '" + e.word + "' appears twice");
    }
    table.entries_.push_back(std::move(e));
  });
  return table;
}

BrownClusterTable BrownClusterTable::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

std::optional<int> BrownClusterTable::cluster_of(std::string_view word) const {
  const auto it = lookup_.find(std::string(word));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void BrownClusterTable::write(std::ostream& out) const {
  for (const Entry& e : entries_) out << e.bitstring << '\t' << e.word << '\t' << e.count << '\n';
}

BrownClusterTable BrownClusterTable::rekeyed(const std::function<std::string(std::string_view)>& rewrite) const {
  BrownClusterTable t;
  t.bitstrings_ = bitstrings_;
  t.digest_ = digest_;
  for (const Entry& e : entries_) {
    Entry copy = e;
    copy.word = rewrite(e.word);
    if (copy.word.empty() || !t.lookup_.emplace(copy.word, copy.cluster).second) continue;
    t.entries_.push_back(std::move(copy));
  }
  return t;
}

SparseFeatureVector encode_brown(std::span<const std::string> tokens, const BrownClusterTable& table) {
  std::vector<std::int32_t> ids;
  for (const auto& t : tokens) {
    if (const auto c = table.cluster_of(t)) ids.push_back(*c);
  }
  return SparseFeatureVector::from_indices(ids);
}

bool looks_like_retweet(const LabeledInstance& instance) {
  return instance.is_retweet || instance.text.starts_with("RT @");
}

std::vector<LabeledInstance> filter_retweets(std::vector<LabeledInstance> instances, bool training) {
  if (!training) return instances;
  std::erase_if(instances, looks_like_retweet);
  return instances;
}

}  // namespace stancekit
