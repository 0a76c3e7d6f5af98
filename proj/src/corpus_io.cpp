#include "stancekit/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "stancekit/errors.hpp"

namespace stancekit {
namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

// Field access shared by the JSONL and CSV readers. Absent, null and empty
// values all read as missing.
class Row {
 public:
  virtual ~Row() = default;
  virtual bool has(const std::string& field) const = 0;
  virtual std::optional<std::string> text(const std::string& field) const = 0;
  virtual std::optional<std::int64_t> integer(const std::string& field) const {
    const auto t = text(field);
    if (!t) return std::nullopt;
    const auto v = parse_int(*t);
    if (!v) throw std::invalid_argument("field '" + field + "' is not an integer: " + *t);
    return v;
  }
  virtual std::optional<bool> flag(const std::string& field) const {
    const auto t = text(field);
    if (!t) return std::nullopt;
    const std::string v = lower(*t);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("field '" + field + "' is not a boolean: " + *t);
  }
};

class JsonRow : public Row {
 public:
  explicit JsonRow(const json& j) : j_(j) {}

  bool has(const std::string& field) const override { return find(field) != nullptr; }

  std::optional<std::string> text(const std::string& field) const override {
    const json* v = find(field);
    if (!v) return std::nullopt;
    if (v->is_string()) {
      const auto& s = v->get_ref<const std::string&>();
      return s.empty() ? std::nullopt : std::optional<std::string>(s);
    }
    if (v->is_number_integer()) return v->dump();
    throw std::invalid_argument("field '" + field + "' must be a string");
  }

  std::optional<std::int64_t> integer(const std::string& field) const override {
    const json* v = find(field);
    if (v && v->is_number_integer()) return v->get<std::int64_t>();
    if (v && v->is_number()) throw std::invalid_argument("field '" + field + "' is not an integer");
    return Row::integer(field);
  }

  std::optional<bool> flag(const std::string& field) const override {
    const json* v = find(field);
    if (v && v->is_boolean()) return v->get<bool>();
    return Row::flag(field);
  }

 private:
  const json* find(const std::string& field) const {
    const auto it = j_.find(field);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json& j_;
};

class CsvRow : public Row {
 public:
  CsvRow(const std::unordered_map<std::string, std::size_t>& header, const std::vector<std::string>& cells)
      : header_(header), cells_(cells) {}

  bool has(const std::string& field) const override { return header_.count(field) > 0; }

  std::optional<std::string> text(const std::string& field) const override {
    const auto it = header_.find(field);
    if (it == header_.end() || it->second >= cells_.size() || cells_[it->second].empty()) return std::nullopt;
    return cells_[it->second];
  }

 private:
  const std::unordered_map<std::string, std::size_t>& header_;
  const std::vector<std::string>& cells_;
};

// One RFC 4180 record; quoted fields may span lines. Returns false at end
// of input. `line` is advanced past the record.
bool read_csv_record(std::istream& in, std::vector<std::string>& cells, std::size_t& line, const std::string& source) {
  cells.clear();
  std::string cell;
  bool quoted = false, any = false, after_quote = false;
  const std::size_t start = line + 1;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          cell += '"';
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        cell += c;
      }
      continue;
    }
    if (c == '"' && cell.empty() && !after_quote) {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
      after_quote = false;
    } else if (c == '\n') {
      ++line;
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      cells.push_back(std::move(cell));
      return true;
    } else if (after_quote && c != '\r') {
      throw ParseError(source, start, "unexpected character after closing quote");
    } else {
      cell += c;
    }
  }
  if (quoted) throw ParseError(source, start, "unterminated quoted field");
  if (!any) return false;
  ++line;
  if (!cell.empty() && cell.back() == '\r') cell.pop_back();
  cells.push_back(std::move(cell));
  return true;
}

class Builder {
 public:
  Builder(std::string source, const CorpusReadOptions& options) : source_(std::move(source)), options_(options) {}

  void add(const Row& row, std::size_t line) {
    try {
      LabeledInstance inst = convert(row, line);
      commit(std::move(inst), line);
    } catch (const ParseError& e) {
      fail(e);
    } catch (const std::exception& e) {
      fail(ParseError(source_, line, e.what()));
    }
  }

  void fail(const ParseError& e) {
    if (!options_.lenient) throw e;
    result_.errors.push_back(e.what());
  }

  CorpusReadResult finish() {
    // Rows without an explicit order follow the explicit ones of their rumour.
    for (auto& [index, rumour] : pending_order_) {
      auto& next = next_order_[rumour];
      while (!used_order_[rumour].insert(next).second) ++next;
      result_.instances[index].order_index = next++;
    }
    return std::move(result_);
  }

 private:
  LabeledInstance convert(const Row& row, std::size_t line) {
    const ColumnMapping& m = options_.columns;
    LabeledInstance inst;
    auto required = [&](const std::string& field) {
      auto v = row.text(field);
      if (!v) throw ParseError(source_, line, "missing field '" + field + "'");
      return *v;
    };
    inst.tweet_id = required(m.tweet_id);
    inst.rumour_id = options_.require_rumour ? required(m.rumour_id) : row.text(m.rumour_id).value_or("");
    // An empty text is a featureless tweet; a missing one is an error.
    if (!row.has(m.text)) throw ParseError(source_, line, "missing field '" + m.text + "'");
    inst.text = row.text(m.text).value_or("");
    inst.event_id = row.text(m.event_id).value_or("");
    if (const auto label = row.text(m.label)) {
      inst.label = parse_stance(*label);
      if (!inst.label) throw ParseError(source_, line, "unknown label '" + *label + "'");
    } else if (options_.require_labels) {
      throw ParseError(source_, line, "missing field '" + m.label + "'");
    }
    inst.is_retweet = row.flag(m.retweet).value_or(false);
    explicit_order_ = row.integer(m.order);
    return inst;
  }

  void commit(LabeledInstance inst, std::size_t line) {
    if (ids_.count(inst.tweet_id)) throw ParseError(source_, line, "duplicate tweet_id " + inst.tweet_id);
    if (explicit_order_) {
      if (!used_order_[inst.rumour_id].insert(*explicit_order_).second) {
        throw ParseError(source_, line,
                         "duplicate order " + std::to_string(*explicit_order_) + " in rumour " + inst.rumour_id);
      }
      inst.order_index = *explicit_order_;
    } else {
      pending_order_.emplace_back(result_.instances.size(), inst.rumour_id);
    }
    ids_.insert(inst.tweet_id);
    result_.instances.push_back(std::move(inst));
  }

  std::string source_;
  const CorpusReadOptions& options_;
  CorpusReadResult result_;
  std::unordered_set<std::string> ids_;
  std::optional<std::int64_t> explicit_order_;
  std::unordered_map<std::string, std::set<std::int64_t>> used_order_;
  std::unordered_map<std::string, std::int64_t> next_order_;
  std::vector<std::pair<std::size_t, std::string>> pending_order_;
};

CorpusReadResult read_rows(std::istream& in, const std::string& source, const CorpusReadOptions& options,
                           CorpusFormat format) {
  Builder builder(source, options);
  if (format == CorpusFormat::jsonl) {
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
      ++line;
      if (!text.empty() && text.back() == '\r') text.pop_back();
      if (text.find_first_not_of(" \t") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(text);
      } catch (const json::parse_error& e) {
        builder.fail(ParseError(source, line, std::string("invalid JSON: ") + e.what()));
        continue;
      }
      if (!j.is_object()) {
        builder.fail(ParseError(source, line, "expected a JSON object"));
        continue;
      }
      builder.add(JsonRow(j), line);
    }
    return builder.finish();
  }

  std::vector<std::string> cells;
  std::size_t line = 0;
  if (!read_csv_record(in, cells, line, source)) return builder.finish();
  std::unordered_map<std::string, std::size_t> header;
  for (std::size_t i = 0; i < cells.size(); ++i) header.emplace(cells[i], i);
  for (const std::string* col : {&options.columns.tweet_id, &options.columns.rumour_id, &options.columns.text}) {
    if (col == &options.columns.rumour_id && !options.require_rumour) continue;
    if (!header.count(*col)) throw ParseError(source, 1, "missing column '" + *col + "'");
  }
  for (;;) {
    const std::size_t start = line + 1;
    try {
      if (!read_csv_record(in, cells, line, source)) break;
    } catch (const ParseError& e) {
      builder.fail(e);
      break;
    }
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != header.size()) {
      builder.fail(ParseError(source, start,
                              "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size())));
      continue;
    }
    builder.add(CsvRow(header, cells), start);
  }
  return builder.finish();
}

CorpusFormat format_for(const std::string& source, const CorpusReadOptions& options) {
  if (options.format) return *options.format;
  const auto ext = lower(std::filesystem::path(source).extension().string());
  return ext == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

}  // namespace

CorpusReadResult read_tweets(std::istream& in, const std::string& source, const CorpusReadOptions& options) {
  return read_rows(in, source, options, format_for(source, options));
}

CorpusReadResult read_corpus(std::istream& in, const std::string& source, const CorpusReadOptions& options) {
  CorpusReadResult result = read_tweets(in, source, options);
  if (result.instances.empty()) throw ConfigError(source + ": empty corpus");
  return result;
}

CorpusReadResult load_corpus(const std::filesystem::path& path, const CorpusReadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus " + path.string());
  return read_corpus(in, path.string(), options);
}

std::vector<RumourCounts> count_by_rumour(std::span<const LabeledInstance> corpus) {
  std::map<std::string, RumourCounts> rows;
  for (const auto& inst : corpus) {
    RumourCounts& r = rows[inst.rumour_id];
    r.rumour = inst.rumour_id;
    ++r.total;
    if (inst.label) {
      ++r.by_stance[index_of(*inst.label)];
    } else {
      ++r.unlabelled;
    }
  }
  std::vector<RumourCounts> out;
  for (auto& [_, r] : rows) out.push_back(std::move(r));
  return out;
}

void write_counts_table(std::ostream& out, std::span<const RumourCounts> rows) {
  out << "rumour,supporting,denying,questioning,total\n";
  RumourCounts all;
  all.rumour = "TOTAL";
  for (const auto& r : rows) {
    out << r.rumour << ',' << r.by_stance[0] << ',' << r.by_stance[1] << ',' << r.by_stance[2] << ',' << r.total
        << '\n';
    for (std::size_t k = 0; k < 3; ++k) all.by_stance[k] += r.by_stance[k];
    all.total += r.total;
  }
  out << all.rumour << ',' << all.by_stance[0] << ',' << all.by_stance[1] << ',' << all.by_stance[2] << ','
      << all.total << '\n';
}

void write_corpus_jsonl(std::ostream& out, std::span<const LabeledInstance> corpus) {
  for (const auto& inst : corpus) {
    nlohmann::ordered_json j;
    j["tweet_id"] = inst.tweet_id;
    j["text"] = inst.text;
    j["rumour_id"] = inst.rumour_id;
    j["event_id"] = inst.event_id;
    j["order_index"] = inst.order_index;
    j["label"] = inst.label ? json(std::string(to_string(*inst.label))) : json(nullptr);
    j["is_retweet"] = inst.is_retweet;
    out << j.dump() << '\n';
  }
}

}  // namespace stancekit
