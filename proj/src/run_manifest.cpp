#include "textmatch/run_manifest.hpp"

#include "textmatch/errors.hpp"
#include "textmatch/metrics.hpp"

namespace textmatch {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const std::string& what) {
  std::string unknown;
  for (const auto& [k, v] : j.items()) {
    bool found = false;
    for (const char* n : known) found = found || k == n;
    if (!found) unknown += " " + k;
  }
  if (!unknown.empty()) throw ConfigError(what + ": unknown fields:" + unknown);
}

fs::path resolve(const fs::path& base, const nlohmann::json& v, const std::string& name) {
  if (!v.is_string() || v.get<std::string>().empty()) {
    throw ConfigError("manifest: " + name + " must be a non-empty path string");
  }
  const fs::path p = v.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

}  // namespace

RunManifest RunManifest::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
  reject_unknown(j,
                 {"model_id", "hyper_parameters", "dataset", "train", "embeddings", "space",
                  "trials", "selection_metric"},
                 "manifest");
  RunManifest m;
  if (!j.contains("model_id") || !j.at("model_id").is_string()) {
    throw ConfigError("manifest: model_id is required");
  }
  m.model_id = j.at("model_id").get<std::string>();
  const ModelSpec& spec = find_model_spec(m.model_id);
  if (j.contains("hyper_parameters")) m.hyper_parameters = j.at("hyper_parameters");
  spec.resolve(m.hyper_parameters);

  if (!j.contains("dataset") || !j.at("dataset").is_object()) {
    throw ConfigError("manifest: dataset section is required");
  }
  const auto& d = j.at("dataset");
  reject_unknown(d, {"corpus_left", "corpus_right", "relations_train", "relations_valid", "relations_test"},
                 "manifest dataset");
  for (const char* f : {"corpus_left", "corpus_right", "relations_train"}) {
    if (!d.contains(f)) throw ConfigError(std::string("manifest: dataset.") + f + " is required");
  }
  m.dataset.corpus_left = resolve(base_dir, d.at("corpus_left"), "dataset.corpus_left");
  m.dataset.corpus_right = resolve(base_dir, d.at("corpus_right"), "dataset.corpus_right");
  m.dataset.relations_train = resolve(base_dir, d.at("relations_train"), "dataset.relations_train");
  if (d.contains("relations_valid")) {
    m.dataset.relations_valid = resolve(base_dir, d.at("relations_valid"), "dataset.relations_valid");
  }
  if (d.contains("relations_test")) {
    m.dataset.relations_test = resolve(base_dir, d.at("relations_test"), "dataset.relations_test");
  }

  try {
    m.train = TrainConfig::from_json(j.value("train", nlohmann::json::object()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest: malformed train section: ") + e.what());
  }
  m.train.validate();
  if (j.contains("embeddings")) m.embeddings = resolve(base_dir, j.at("embeddings"), "embeddings");

  if (j.contains("space")) {
    m.space = SearchSpace::from_json(j.at("space"));
    m.space->validate_for(m.model_id);
  }
  if (j.contains("trials")) {
    if (!j.at("trials").is_number_unsigned() || j.at("trials").get<std::size_t>() < 1) {
      throw ConfigError("manifest: trials must be a positive integer");
    }
    m.trials = j.at("trials").get<std::size_t>();
  }
  if (j.contains("selection_metric")) {
    if (!j.at("selection_metric").is_string()) throw ConfigError("manifest: selection_metric must be a string");
    m.selection_metric = j.at("selection_metric").get<std::string>();
    Metric::parse(m.selection_metric);
  }
  return m;
}

RunManifest RunManifest::load(const fs::path& file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(file));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file.filename().string() + ": invalid JSON: " + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return from_json(j, file.parent_path());
}

}  // namespace textmatch
