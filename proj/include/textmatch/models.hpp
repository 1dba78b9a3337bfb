#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "textmatch/autodiff.hpp"
#include "textmatch/schema.hpp"
#include "textmatch/text_pipeline.hpp"

namespace textmatch {

enum class Family { kRepresentation, kInteraction };
std::string_view family_name(Family f);

struct ModelSpec {
  std::string id;
  std::string display_name;
  Family family = Family::kInteraction;
  std::string description;
  Schema schema;

  nlohmann::json defaults() const;
  /// Defaults overlaid with `overrides`; throws ConfigError listing every
  /// offending name.
  nlohmann::json resolve(const nlohmann::json& overrides) const;
  nlohmann::json summary_json() const;
  nlohmann::json to_json() const;
};

/// Registered specs in id order: drmm, dssm, knrm.
const std::vector<ModelSpec>& model_registry();
const ModelSpec& find_model_spec(std::string_view id);

/// Data-derived inputs a model needs at construction time.
struct ModelContext {
  std::size_t vocab_size = 0;    // interaction models: index vocabulary size
  std::size_t trigram_dim = 0;   // dssm: trigram vocabulary size
  std::optional<Tensor> embeddings;     // vocab_size x dim
  std::optional<std::vector<double>> idf;  // drmm: per index
};

struct Explanation {
  Family family = Family::kInteraction;
  double score = 0.0;
  // representation family
  std::vector<double> left_vector;
  std::vector<double> right_vector;
  // interaction family: unpadded |left| x |right| cosine matrix
  Tensor interaction;
  std::vector<std::int64_t> left_ids;
  std::vector<std::int64_t> right_ids;
  /// Final linear weights and, for DRMM, the term gates.
  std::map<std::string, std::vector<double>> weights;

  nlohmann::json to_json() const;
};

using TextPair = std::pair<const Datum*, const Datum*>;

/// A parameterised matching network. Scoring builds a fresh graph per call,
/// so a frozen model can be scored from several threads at once.
class MatchingModel {
 public:
  virtual ~MatchingModel() = default;

  const ModelSpec& spec() const { return *spec_; }
  const nlohmann::json& hyper_parameters() const { return hp_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  /// Adds the scoring sub-graph for `pairs` to `g`; the result is batch x 1.
  virtual NodeId build_scores(Graph& g, std::span<const TextPair> pairs) = 0;
  virtual Explanation explain(const Datum& left, const Datum& right) = 0;
  virtual std::unique_ptr<MatchingModel> clone() const = 0;

  double score(const Datum& left, const Datum& right);
  std::vector<double> score_batch(std::span<const TextPair> pairs);

 protected:
  MatchingModel(const ModelSpec& spec, nlohmann::json hp) : spec_(&spec), hp_(std::move(hp)) {}
  MatchingModel(const MatchingModel&) = default;

  /// Graph node for each parameter, created on first use within `g`.
  NodeId param_node(Graph& g, std::map<std::string, NodeId>& cache, std::string_view name);

  const ModelSpec* spec_;
  nlohmann::json hp_;
  ParameterSet params_;
};

std::unique_ptr<MatchingModel> build_dssm(const nlohmann::json& hp, const ModelContext& ctx,
                                          std::uint64_t seed);
std::unique_ptr<MatchingModel> build_drmm(const nlohmann::json& hp, const ModelContext& ctx,
                                          std::uint64_t seed);
std::unique_ptr<MatchingModel> build_knrm(const nlohmann::json& hp, const ModelContext& ctx,
                                          std::uint64_t seed);
/// Dispatches on `model_id`; `hp` may be partial and is resolved against the schema.
std::unique_ptr<MatchingModel> build_model(std::string_view model_id, const nlohmann::json& hp,
                                           const ModelContext& ctx, std::uint64_t seed);

/// Rebuilds a model from persisted parameters. Names and shapes must match
/// what `build_model` creates for `hp`.
std::unique_ptr<MatchingModel> restore_model(std::string_view model_id, const nlohmann::json& hp,
                                             const ParameterSet& params);

/// Parses "300,300,128" style width lists.
std::vector<std::size_t> parse_widths(std::string_view text);

}  // namespace textmatch
