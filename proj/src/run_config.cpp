#include "stancekit/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "stancekit/errors.hpp"

#ifndef STANCEKIT_DATA_DIR
#define STANCEKIT_DATA_DIR "data"
#endif

namespace stancekit {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!keys.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& into, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    into = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

template <typename E, typename Parse>
void read_enum(const json& obj, const char* key, E& into, const std::string& where, Parse parse) {
  std::string text;
  read(obj, key, text, where);
  if (text.empty()) return;
  const auto v = parse(text);
  if (!v) throw ConfigError("config key '" + where + key + "' has unknown value '" + text + "'");
  into = *v;
}

std::string_view form_name(PosteriorForm f) {
  switch (f) {
    case PosteriorForm::automatic: return "automatic";
    case PosteriorForm::function_space: return "function_space";
    case PosteriorForm::weight_space: return "weight_space";
  }
  return "?";
}

std::optional<PosteriorForm> parse_form(std::string_view s) {
  for (PosteriorForm f : {PosteriorForm::automatic, PosteriorForm::function_space, PosteriorForm::weight_space}) {
    if (s == form_name(f)) return f;
  }
  return std::nullopt;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::filesystem::path absolute_path(const std::filesystem::path& p) {
  return p.empty() ? p : std::filesystem::absolute(p).lexically_normal();
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.stopwords = std::filesystem::path(STANCEKIT_DATA_DIR) / "stopwords_en.txt";
  c.emoticons = std::filesystem::path(STANCEKIT_DATA_DIR) / "emoticons.tsv";
  c.output_dir = "stancekit-run";
  c.settings.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return c;
}

RunConfig RunConfig::from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, "",
                 {"corpus", "corpus_format", "columns", "lenient", "brown_clusters", "stopwords", "emoticons",
                  "remove_urls", "features", "output_dir", "seed", "plan", "fit", "optimizer", "training",
                  "baselines", "jobs", "digests"});
  RunConfig c = defaults();
  std::string path;
  auto read_path = [&](const char* key, std::filesystem::path& into) {
    path.clear();
    read(j, key, path, "");
    if (!path.empty()) into = resolve(base_dir, path);
  };
  read_path("corpus", c.corpus);
  read_path("brown_clusters", c.brown_clusters);
  read_path("stopwords", c.stopwords);
  read_path("emoticons", c.emoticons);
  read_path("output_dir", c.output_dir);
  read(j, "remove_urls", c.remove_urls, "");
  read(j, "lenient", c.corpus_options.lenient, "");
  std::string format;
  read(j, "corpus_format", format, "");
  if (format == "jsonl") {
    c.corpus_options.format = CorpusFormat::jsonl;
  } else if (format == "csv") {
    c.corpus_options.format = CorpusFormat::csv;
  } else if (!format.empty()) {
    throw ConfigError("config key 'corpus_format' has unknown value '" + format + "'");
  }
  if (j.contains("columns")) {
    const json& m = j["columns"];
    reject_unknown(m, "columns.", {"tweet_id", "text", "rumour_id", "event_id", "label", "order", "retweet"});
    ColumnMapping& cm = c.corpus_options.columns;
    read(m, "tweet_id", cm.tweet_id, "columns.");
    read(m, "text", cm.text, "columns.");
    read(m, "rumour_id", cm.rumour_id, "columns.");
    read(m, "event_id", cm.event_id, "columns.");
    read(m, "label", cm.label, "columns.");
    read(m, "order", cm.order, "columns.");
    read(m, "retweet", cm.retweet, "columns.");
  }
  read_enum(j, "features", c.settings.features, "", parse_feature_kind);
  read(j, "seed", c.settings.plan.seed, "");
  read(j, "jobs", c.settings.jobs, "");

  if (j.contains("plan")) {
    const json& p = j["plan"];
    reject_unknown(p, "plan.", {"protocol", "target_train_sizes", "test_offset", "fold_unit", "methods"});
    ExperimentPlan& plan = c.settings.plan;
    read_enum(p, "protocol", plan.protocol, "plan.", parse_protocol);
    read(p, "target_train_sizes", plan.target_train_sizes, "plan.");
    int offset = -1;
    read(p, "test_offset", offset, "plan.");
    if (p.contains("test_offset") && !p["test_offset"].is_null()) plan.test_offset = offset;
    read_enum(p, "fold_unit", plan.fold_unit, "plan.", parse_fold_unit);
    if (p.contains("methods")) {
      std::vector<std::string> names;
      read(p, "methods", names, "plan.");
      plan.methods.clear();
      for (const auto& n : names) {
        const auto m = parse_method(n);
        if (!m) throw ConfigError("config key 'plan.methods' has unknown method '" + n + "'");
        plan.methods.push_back(*m);
      }
    }
  }
  TrainingConfig& t = c.settings.training;
  if (j.contains("fit")) {
    const json& f = j["fit"];
    reject_unknown(f, "fit.", {"ep_tolerance", "ep_max_sweeps", "damping", "jitter", "posterior_form"});
    read(f, "ep_tolerance", t.fit.ep_tolerance, "fit.");
    read(f, "ep_max_sweeps", t.fit.ep_max_sweeps, "fit.");
    read(f, "damping", t.fit.damping, "fit.");
    read(f, "jitter", t.fit.jitter, "fit.");
    read_enum(f, "posterior_form", t.fit.form, "fit.", parse_form);
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    reject_unknown(o, "optimizer.", {"max_iters", "restarts", "log_lower", "log_upper", "gradient_tolerance"});
    read(o, "max_iters", t.optimizer.max_iters, "optimizer.");
    read(o, "restarts", t.optimizer.restarts, "optimizer.");
    read(o, "log_lower", t.optimizer.log_lower, "optimizer.");
    read(o, "log_upper", t.optimizer.log_upper, "optimizer.");
    read(o, "gradient_tolerance", t.optimizer.gradient_tolerance, "optimizer.");
  }
  if (j.contains("training")) {
    const json& tr = j["training"];
    reject_unknown(tr, "training.", {"initial_signal_variance", "initial_kappa", "initial_v", "optimize"});
    read(tr, "initial_signal_variance", t.initial_signal_variance, "training.");
    read(tr, "initial_kappa", t.initial_kappa, "training.");
    read(tr, "initial_v", t.initial_v, "training.");
    read(tr, "optimize", t.optimize, "training.");
  }
  if (j.contains("baselines")) {
    const json& b = j["baselines"];
    reject_unknown(b, "baselines.", {"l2_strength", "nb_alpha"});
    read(b, "l2_strength", c.settings.l2_strength, "baselines.");
    read(b, "nb_alpha", c.settings.nb_alpha, "baselines.");
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return from_json(text.str(), std::filesystem::absolute(path).parent_path());
}

void RunConfig::validate() const {
  auto must_exist = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("no ") + what + " file configured");
    if (!std::filesystem::is_regular_file(p)) throw ConfigError(std::string(what) + " file not found: " + p.string());
  };
  must_exist(corpus, "corpus");
  must_exist(stopwords, "stopword");
  must_exist(emoticons, "emoticon");
  if (settings.features == FeatureKind::brown) must_exist(brown_clusters, "Brown cluster");
  if (output_dir.empty()) throw ConfigError("no output directory configured");
  settings.plan.validate();
  settings.training.fit.validate();
  if (settings.training.optimizer.max_iters < 0 || settings.training.optimizer.restarts < 1) {
    throw ConfigError("optimizer needs max_iters >= 0 and restarts >= 1");
  }
  if (settings.jobs < 1) throw ConfigError("jobs must be at least 1");
  if (!(settings.l2_strength > 0) || !(settings.nb_alpha > 0)) {
    throw ConfigError("baseline l2_strength and nb_alpha must be positive");
  }
}

std::string RunConfig::snapshot_json(const std::map<std::string, std::string>& digests) const {
  ordered_json j;
  j["corpus"] = absolute_path(corpus).string();
  j["corpus_format"] = corpus_options.format ? (corpus_options.format == CorpusFormat::csv ? "csv" : "jsonl")
                                             : ordered_json(nullptr);
  const ColumnMapping& m = corpus_options.columns;
  j["columns"] = {{"tweet_id", m.tweet_id}, {"text", m.text},   {"rumour_id", m.rumour_id}, {"event_id", m.event_id},
                  {"label", m.label},       {"order", m.order}, {"retweet", m.retweet}};
  j["lenient"] = corpus_options.lenient;
  j["brown_clusters"] = absolute_path(brown_clusters).string();
  j["stopwords"] = absolute_path(stopwords).string();
  j["emoticons"] = absolute_path(emoticons).string();
  j["remove_urls"] = remove_urls;
  j["features"] = to_string(settings.features);
  j["output_dir"] = absolute_path(output_dir).string();
  j["seed"] = settings.plan.seed;
  const ExperimentPlan& p = settings.plan;
  ordered_json methods = ordered_json::array();
  for (Method meth : p.methods) methods.push_back(to_string(meth));
  j["plan"] = {{"protocol", to_string(p.protocol)},
               {"target_train_sizes", p.target_train_sizes},
               {"test_offset", p.effective_test_offset()},
               {"fold_unit", to_string(p.fold_unit)},
               {"methods", methods}};
  const TrainingConfig& t = settings.training;
  j["fit"] = {{"ep_tolerance", t.fit.ep_tolerance},
              {"ep_max_sweeps", t.fit.ep_max_sweeps},
              {"damping", t.fit.damping},
              {"jitter", t.fit.jitter},
              {"posterior_form", form_name(t.fit.form)}};
  j["optimizer"] = {{"max_iters", t.optimizer.max_iters},
                    {"restarts", t.optimizer.restarts},
                    {"log_lower", t.optimizer.log_lower},
                    {"log_upper", t.optimizer.log_upper},
                    {"gradient_tolerance", t.optimizer.gradient_tolerance}};
  j["training"] = {{"initial_signal_variance", t.initial_signal_variance},
                   {"initial_kappa", t.initial_kappa},
                   {"initial_v", t.initial_v},
                   {"optimize", t.optimize}};
  j["baselines"] = {{"l2_strength", settings.l2_strength}, {"nb_alpha", settings.nb_alpha}};
  if (!digests.empty()) j["digests"] = digests;
  return j.dump(2) + "\n";
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* raw = std::getenv("STANCEKIT_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string_view text(raw);
  std::uint64_t seed = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("STANCEKIT_SEED must be an unsigned integer, got '" + std::string(text) + "'");
  }
  return seed;
}

}  // namespace stancekit
