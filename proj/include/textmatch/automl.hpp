#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textmatch/random.hpp"
#include "textmatch/train.hpp"
#include "textmatch/workflow.hpp"

namespace textmatch {

enum class DomainKind { kCategorical, kIntUniform, kFloatUniform, kFloatLogUniform };
std::string_view domain_kind_name(DomainKind k);

struct Domain {
  DomainKind kind = DomainKind::kCategorical;
  std::vector<nlohmann::json> values;  // categorical
  double low = 0.0;
  double high = 0.0;

  bool contains(const nlohmann::json& v) const;
  nlohmann::json to_json() const;
};

/// Parameter name -> domain. JSON form:
/// {"learning_rate": {"type": "float_log_uniform", "low": 1e-4, "high": 1e-1},
///  "hist_bins": {"type": "categorical", "values": [10, 30]}}
struct SearchSpace {
  std::map<std::string, Domain> params;

  /// Throws ConfigError on malformed domains (empty lists, low >= high,
  /// non-positive log-uniform bounds).
  static SearchSpace from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Every name must belong to the model schema or the training schema, and
  /// every value the domain can produce must be accepted there.
  void validate_for(std::string_view model_id) const;
};

/// One independent draw per parameter, in name order.
nlohmann::json sample(const SearchSpace& space, Rng& rng);

enum class TrialStatus { kPending, kDone, kFailed };
std::string_view trial_status_name(TrialStatus s);

struct Trial {
  std::size_t index = 0;
  nlohmann::json config;
  TrialStatus status = TrialStatus::kPending;
  std::optional<double> metric;
  std::string error;

  nlohmann::json to_json() const;
};

struct TuneOptions {
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::string metric = "ndcg@10";
  TrainConfig base_config;
  nlohmann::json base_hyper_parameters = nlohmann::json::object();
  std::size_t workers = 1;
  /// When set, pending trials are skipped and tune throws Error.
  const std::atomic<bool>* cancel = nullptr;
};

struct TuneResult {
  std::vector<Trial> trials;
  std::size_t best_index = 0;
  TrainedModel best;
  std::string metric;

  /// Trial table plus best index; no timings, so equal runs give equal JSON.
  nlohmann::json to_json() const;
};

using TrialSink = std::function<void(const Trial&)>;

/// Seeded random search. Trial i samples with derive_seed(seed, i), trains on
/// `raw.train` and is scored on `raw.valid` with the selection metric. Data
/// preparation, initialisation and training all use `seed`. Failed
/// trials are kept in the table; the best done trial wins, ties to the lower
/// index. Throws Error listing every trial's diagnostic when none succeeds.
TuneResult tune(std::string_view model_id, const SearchSpace& space, const RawDataset& raw,
                const TuneOptions& options, const TrialSink& sink = {});

}  // namespace textmatch
