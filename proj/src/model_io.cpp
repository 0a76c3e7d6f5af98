#include "stancekit/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "stancekit/errors.hpp"

namespace stancekit {
namespace {

using nlohmann::ordered_json;

std::string_view to_string(PosteriorForm f) {
  switch (f) {
    case PosteriorForm::automatic: return "automatic";
    case PosteriorForm::function_space: return "function_space";
    case PosteriorForm::weight_space: return "weight_space";
  }
  return "?";
}

PosteriorForm parse_form(const std::string& s) {
  for (PosteriorForm f : {PosteriorForm::automatic, PosteriorForm::function_space, PosteriorForm::weight_space}) {
    if (s == to_string(f)) return f;
  }
  throw std::invalid_argument("unknown posterior form '" + s + "'");
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from(const ordered_json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
  return v;
}

ordered_json kernel_json(const KernelSpec& k) {
  ordered_json j;
  if (const auto* icm = std::get_if<IcmKernelParams>(&k)) {
    j["family"] = "icm";
    j["signal_variance"] = icm->data_kernel.signal_variance;
    j["kappa"] = icm->kappa;
    j["v"] = icm->v;
  } else {
    j["family"] = "linear";
    j["signal_variance"] = signal_variance(k);
  }
  return j;
}

KernelSpec kernel_from(const ordered_json& j) {
  const auto family = j.at("family").get<std::string>();
  if (family == "linear") return make_linear_kernel(j.at("signal_variance").get<double>());
  if (family == "icm") {
    return make_icm_kernel(j.at("signal_variance").get<double>(), j.at("kappa").get<std::vector<double>>(),
                           j.at("v").get<std::vector<double>>());
  }
  throw std::invalid_argument("unknown kernel family '" + family + "'");
}

ordered_json classifier_json(const BinaryClassifier& c) {
  ordered_json j;
  j["kernel"] = kernel_json(c.kernel);
  j["log_evidence"] = std::isfinite(c.log_evidence) ? ordered_json(c.log_evidence) : ordered_json(nullptr);
  j["warnings"] = c.warnings;
  ordered_json inputs = ordered_json::array();
  for (const auto& in : c.data.inputs) {
    ordered_json features = ordered_json::array();
    for (const auto& e : in.features.entries()) features.push_back({e.index, e.count});
    inputs.push_back({{"task", in.task_id}, {"features", std::move(features)}});
  }
  j["inputs"] = std::move(inputs);
  j["labels"] = c.data.labels;
  j["site_precision"] = vector_json(c.state.site_precision);
  j["site_location"] = vector_json(c.state.site_location);
  return j;
}

BinaryClassifier classifier_from(const ordered_json& j, const FitConfig& fit) {
  BinaryClassifier c;
  c.kernel = kernel_from(j.at("kernel"));
  c.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& in : j.at("inputs")) {
    std::vector<FeatureCount> entries;
    for (const auto& e : in.at("features")) entries.push_back({e.at(0).get<std::int32_t>(), e.at(1).get<std::int32_t>()});
    c.data.inputs.push_back({SparseFeatureVector::from_entries(std::move(entries)), in.at("task").get<int>()});
  }
  c.data.labels = j.at("labels").get<std::vector<int>>();
  c.data.validate();
  c.state = ep_state_from_sites(c.data, c.kernel, fit, vector_from(j.at("site_precision")),
                                vector_from(j.at("site_location")));
  const auto& ev = j.at("log_evidence");
  c.log_evidence = ev.is_null() ? -std::numeric_limits<double>::infinity() : ev.get<double>();
  return c;
}

}  // namespace

void save_model(std::ostream& out, const StanceModel& model, const FeatureSpec& features) {
  ordered_json j;
  j["magic"] = kModelMagic;
  j["format_version"] = kModelFormatVersion;
  j["variant"] = to_string(model.variant());
  j["task_keys"] = model.task_keys();
  j["target_task"] = model.target_task();
  const FitConfig& fit = model.fit_config();
  j["fit"] = {{"ep_tolerance", fit.ep_tolerance}, {"ep_max_sweeps", fit.ep_max_sweeps},
              {"damping", fit.damping},           {"jitter", fit.jitter},
              {"form", to_string(fit.form)}};
  j["features"] = {{"kind", to_string(features.kind)},
                   {"vocabulary", features.vocabulary},
                   {"brown_path", features.brown_path},
                   {"brown_digest", features.brown_digest},
                   {"stopword_path", features.stopword_path},
                   {"stopword_digest", features.stopword_digest},
                   {"emoticon_path", features.emoticon_path},
                   {"emoticon_digest", features.emoticon_digest},
                   {"remove_urls", features.remove_urls},
                   {"task_unit", to_string(features.task_unit)}};
  ordered_json classes = ordered_json::object();
  for (Stance s : kAllStances) classes[std::string(to_string(s))] = classifier_json(model.classifier(s));
  j["classes"] = std::move(classes);
  out << j.dump() << '\n';
}

void save_model(const std::filesystem::path& path, const StanceModel& model, const FeatureSpec& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model " + path.string());
  save_model(out, model, features);
  if (!out) throw ConfigError("failed writing model " + path.string());
}

SavedModel load_model(std::istream& in, const std::string& source) {
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError(source + ": not a stancekit model (" + e.what() + ")");
  }
  if (!j.is_object() || j.value("magic", "") != kModelMagic) {
    throw ConfigError(source + ": not a stancekit model (bad magic)");
  }
  const auto version = j.value("format_version", -1);
  if (version != kModelFormatVersion) {
    throw ConfigError(source + ": model format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelFormatVersion) + ")");
  }
  try {
    const auto variant = parse_method_variant(j.at("variant").get<std::string>());
    if (!variant) throw std::invalid_argument("unknown variant");
    FitConfig fit;
    const auto& f = j.at("fit");
    fit.ep_tolerance = f.at("ep_tolerance").get<double>();
    fit.ep_max_sweeps = f.at("ep_max_sweeps").get<int>();
    fit.damping = f.at("damping").get<double>();
    fit.jitter = f.at("jitter").get<double>();
    fit.form = parse_form(f.at("form").get<std::string>());
    fit.validate();

    FeatureSpec features;
    const auto& fs = j.at("features");
    const auto kind = parse_feature_kind(fs.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown feature kind");
    features.kind = *kind;
    features.vocabulary = fs.at("vocabulary").get<std::vector<std::string>>();
    features.brown_path = fs.at("brown_path").get<std::string>();
    features.brown_digest = fs.at("brown_digest").get<std::string>();
    features.stopword_path = fs.at("stopword_path").get<std::string>();
    features.stopword_digest = fs.at("stopword_digest").get<std::string>();
    features.emoticon_path = fs.at("emoticon_path").get<std::string>();
    features.emoticon_digest = fs.at("emoticon_digest").get<std::string>();
    features.remove_urls = fs.at("remove_urls").get<bool>();
    const auto unit = parse_fold_unit(fs.at("task_unit").get<std::string>());
    if (!unit) throw std::invalid_argument("unknown task unit");
    features.task_unit = *unit;

    std::array<BinaryClassifier, kStanceCount> per_class;
    for (Stance s : kAllStances) {
      per_class[index_of(s)] = classifier_from(j.at("classes").at(std::string(to_string(s))), fit);
    }
    return {StanceModel(*variant, j.at("task_keys").get<std::vector<std::string>>(), j.at("target_task").get<int>(),
                        std::move(per_class), fit),
            std::move(features)};
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(source + ": malformed model: " + e.what());
  }
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model " + path.string());
  return load_model(in, path.string());
}

}  // namespace stancekit
