#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textmatch/autodiff.hpp"
#include "textmatch/dataset.hpp"
#include "textmatch/metrics.hpp"
#include "textmatch/models.hpp"
#include "textmatch/schema.hpp"

namespace textmatch {

enum class LossKind { kMse, kBce, kPairwiseHinge, kListwiseSoftmaxCe };
std::string_view loss_name(LossKind k);
LossKind parse_loss(std::string_view name);
/// The batching a loss consumes.
BatchMode batch_mode_for(LossKind k);

enum class OptimizerKind { kSgd, kAdam };
std::string_view optimizer_name(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

// Graph losses. Score nodes are n x 1 columns.
NodeId mse_loss(Graph& g, NodeId scores, std::span<const double> labels);
/// Sigmoid is applied to the raw scores; probabilities are kept within
/// [1e-10, 1 - 1e-10] before the log.
NodeId bce_loss(Graph& g, NodeId scores, std::span<const double> labels);
NodeId pairwise_hinge_loss(Graph& g, NodeId positive, NodeId negative, std::size_t n,
                           double margin);
/// Mean cross entropy between softmax(scores) and labels / sum(labels) over
/// the groups that have >= 2 items and a positive label sum. Throws
/// ConfigError when no group qualifies.
NodeId listwise_softmax_ce_loss(Graph& g, std::span<const NodeId> group_scores,
                                const std::vector<std::vector<double>>& group_labels);

// Value forms of the losses.
double pointwise_loss(std::span<const double> scores, std::span<const double> labels,
                      LossKind kind);
double pairwise_hinge(std::span<const double> positive, std::span<const double> negative,
                      double margin = 1.0);
double listwise_softmax_ce(const std::vector<std::vector<double>>& scores,
                           const std::vector<std::vector<double>>& labels);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// SGD or bias-corrected Adam over the trainable parameters of a set.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  /// Applies one update. Every gradient is checked first; a non-finite entry
  /// throws DivergenceError naming the parameter and nothing is changed.
  void step(ParameterSet& params, const Gradients& grads);
  std::size_t steps() const { return t_; }

 private:
  OptimizerConfig config_;
  std::map<std::string, Tensor, std::less<>> m_;
  std::map<std::string, Tensor, std::less<>> v_;
  std::size_t t_ = 0;
};

struct TrainConfig {
  LossKind loss = LossKind::kPairwiseHinge;
  double margin = 1.0;
  OptimizerConfig optimizer;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::size_t num_neg = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> metrics = {"ndcg@10", "map"};

  BatchMode batch_mode() const { return batch_mode_for(loss); }
  /// Throws ConfigError on epochs/batch_size/num_neg of 0, a non-positive
  /// margin or learning rate, or an unknown metric.
  void validate() const;

  /// Keys: loss, margin, optimizer, learning_rate, epochs, batch_size,
  /// num_neg, seed, metrics. Missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Searchable training knobs, in the same form as model schemas.
const Schema& train_config_schema();
/// Overlays schema-validated training knobs from `values` onto `base`;
/// names outside the training schema are ignored.
TrainConfig apply_train_params(TrainConfig base, const nlohmann::json& values);

struct EpochEvent {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  std::map<std::string, double> metrics;
  double seconds = 0.0;

  nlohmann::json to_json() const;
  static EpochEvent from_json(const nlohmann::json& j);
};

struct TrainResult {
  std::vector<EpochEvent> history;
  bool failed = false;
  bool cancelled = false;
  std::string error;
};

using EventSink = std::function<void(const EpochEvent&)>;

/// Runs `config.epochs` epochs of seeded-shuffled mini-batch updates,
/// evaluating `valid` (when given) after each epoch. A non-finite loss or
/// gradient stops training with `failed` set and the history so far kept.
/// Setting `*cancel` stops after the current batch.
TrainResult train(MatchingModel& model, const DataPack& train_pack, const DataPack* valid,
                  const TrainConfig& config, const EventSink& sink = {},
                  const std::atomic<bool>* cancel = nullptr);

/// Loss of the model over the whole pack with the batches of epoch 1.
double training_loss(MatchingModel& model, const DataPack& pack, const TrainConfig& config);

/// Per-query rankings of every relation in `pack`, queries in ascending id order.
std::map<std::string, RankedList> rank_pack(MatchingModel& model, const DataPack& pack);

/// Scores all relations, ranks per left id and averages each metric over queries.
std::map<std::string, double> evaluate(MatchingModel& model, const DataPack& pack,
                                       const std::vector<std::string>& metrics);
/// Metrics averaged over precomputed rankings.
std::map<std::string, double> evaluate_rankings(const std::map<std::string, RankedList>& rankings,
                                                const std::vector<std::string>& metrics);

}  // namespace textmatch
