#include "textmatch/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "textmatch/errors.hpp"
#include "textmatch/random.hpp"

namespace textmatch {

std::string_view loss_name(LossKind k) {
  switch (k) {
    case LossKind::kMse: return "mse";
    case LossKind::kBce: return "bce";
    case LossKind::kPairwiseHinge: return "pairwise_hinge";
    case LossKind::kListwiseSoftmaxCe: return "listwise_softmax_ce";
  }
  return "";
}

LossKind parse_loss(std::string_view name) {
  for (auto k : {LossKind::kMse, LossKind::kBce, LossKind::kPairwiseHinge,
                 LossKind::kListwiseSoftmaxCe}) {
    if (loss_name(k) == name) return k;
  }
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (expected mse, bce, pairwise_hinge or listwise_softmax_ce)");
}

BatchMode batch_mode_for(LossKind k) {
  switch (k) {
    case LossKind::kMse:
    case LossKind::kBce: return BatchMode::kPointwise;
    case LossKind::kPairwiseHinge: return BatchMode::kPairwise;
    case LossKind::kListwiseSoftmaxCe: return BatchMode::kListwise;
  }
  return BatchMode::kPointwise;
}

std::string_view optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

// ---------------------------------------------------------------------------
// Losses

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
  if (a == 0) throw ShapeError(std::string(what) + ": empty input");
}

constexpr double kProbFloor = 1e-10;

double evaluate_scalar(Graph& g, NodeId loss) {
  g.evaluate();
  return g.value(loss).item();
}

bool group_qualifies(const std::vector<double>& labels) {
  return labels.size() >= 2 && std::accumulate(labels.begin(), labels.end(), 0.0) > 0.0;
}

}  // namespace

NodeId mse_loss(Graph& g, NodeId scores, std::span<const double> labels) {
  if (labels.empty()) throw ShapeError("mse: empty input");
  NodeId diff = g.sub(scores, g.constant(Tensor::column({labels.begin(), labels.end()})));
  return g.mean_axis(g.mul(diff, diff), 0);
}

NodeId bce_loss(Graph& g, NodeId scores, std::span<const double> labels) {
  if (labels.empty()) throw ShapeError("bce: empty input");
  std::vector<double> neg(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw ConfigError("bce labels must be 0 or 1, got " + std::to_string(labels[i]));
    }
    neg[i] = 1.0 - labels[i];
  }
  // 1 - sigmoid(p) = sigmoid(-p), so one floor covers both clamps
  NodeId log_p = g.log(g.clamp_min(g.sigmoid(scores), kProbFloor));
  NodeId log_q = g.log(g.clamp_min(g.sigmoid(g.scale(scores, -1.0)), kProbFloor));
  NodeId ll = g.add(g.mul(log_p, g.constant(Tensor::column({labels.begin(), labels.end()}))),
                    g.mul(log_q, g.constant(Tensor::column(std::move(neg)))));
  return g.scale(g.mean_axis(ll, 0), -1.0);
}

NodeId pairwise_hinge_loss(Graph& g, NodeId positive, NodeId negative, std::size_t n,
                           double margin) {
  if (n == 0) throw ShapeError("pairwise_hinge: empty input");
  if (!(margin > 0.0)) throw ConfigError("pairwise_hinge margin must be positive");
  NodeId gap = g.add(g.sub(negative, positive), g.constant(Tensor({n, 1}, margin)));
  return g.mean_axis(g.relu(gap), 0);
}

NodeId listwise_softmax_ce_loss(Graph& g, std::span<const NodeId> group_scores,
                                const std::vector<std::vector<double>>& group_labels) {
  check_lengths(group_scores.size(), group_labels.size(), "listwise_softmax_ce");
  std::vector<NodeId> terms;
  NodeId one = g.constant(Tensor::scalar(1.0));
  for (std::size_t i = 0; i < group_scores.size(); ++i) {
    const auto& labels = group_labels[i];
    for (double l : labels) {
      if (l < 0.0) throw ConfigError("listwise labels must be non-negative");
    }
    if (!group_qualifies(labels)) continue;
    const double total = std::accumulate(labels.begin(), labels.end(), 0.0);
    std::vector<double> target(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) target[j] = labels[j] / total;
    NodeId row = g.matmul(one, group_scores[i], true);  // 1 x n
    NodeId logp = g.log(g.clamp_min(g.softmax_rows(row), kProbFloor));
    terms.push_back(g.sum_axis(g.mul(logp, g.constant(Tensor::row(std::move(target)))), 1));
  }
  if (terms.empty()) {
    throw ConfigError("listwise_softmax_ce: every group has fewer than 2 items or all-zero labels");
  }
  return g.scale(g.mean_axis(g.concat_axis(terms, 0), 0), -1.0);
}

double pointwise_loss(std::span<const double> scores, std::span<const double> labels,
                      LossKind kind) {
  check_lengths(scores.size(), labels.size(), "pointwise_loss");
  Graph g;
  NodeId s = g.constant(Tensor::column({scores.begin(), scores.end()}));
  switch (kind) {
    case LossKind::kMse: return evaluate_scalar(g, mse_loss(g, s, labels));
    case LossKind::kBce: return evaluate_scalar(g, bce_loss(g, s, labels));
    default: break;
  }
  throw ConfigError("pointwise_loss expects mse or bce");
}

double pairwise_hinge(std::span<const double> positive, std::span<const double> negative,
                      double margin) {
  check_lengths(positive.size(), negative.size(), "pairwise_hinge");
  Graph g;
  NodeId p = g.constant(Tensor::column({positive.begin(), positive.end()}));
  NodeId n = g.constant(Tensor::column({negative.begin(), negative.end()}));
  return evaluate_scalar(g, pairwise_hinge_loss(g, p, n, positive.size(), margin));
}

double listwise_softmax_ce(const std::vector<std::vector<double>>& scores,
                           const std::vector<std::vector<double>>& labels) {
  check_lengths(scores.size(), labels.size(), "listwise_softmax_ce");
  Graph g;
  std::vector<NodeId> nodes;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    check_lengths(scores[i].size(), labels[i].size(), "listwise_softmax_ce group");
    nodes.push_back(g.constant(Tensor::column(scores[i])));
  }
  return evaluate_scalar(g, listwise_softmax_ce_loss(g, nodes, labels));
}

// ---------------------------------------------------------------------------
// Optimizer

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0) || !std::isfinite(config_.learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
}

void Optimizer::step(ParameterSet& params, const Gradients& grads) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw ConfigError("gradient for unknown parameter '" + name + "'");
    const Tensor& p = params.at(name).tensor;
    if (g.shape() != p.shape()) {
      throw ShapeError("gradient for '" + name + "' has shape " + shape_string(g.shape()) +
                       ", parameter is " + shape_string(p.shape()));
    }
    if (!g.all_finite()) throw DivergenceError("non-finite gradient for parameter '" + name + "'");
  }
  ++t_;
  const double lr = config_.learning_rate;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    Parameter& param = params.at(name);
    if (!param.trainable) continue;
    auto p = param.tensor.data();
    auto gd = g.data();
    if (config_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * gd[i];
      continue;
    }
    auto [mit, m_new] = m_.try_emplace(name, g.shape(), 0.0);
    auto [vit, v_new] = v_.try_emplace(name, g.shape(), 0.0);
    auto m = mit->second.data();
    auto v = vit->second.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * gd[i];
      v[i] = b2 * v[i] + (1.0 - b2) * gd[i] * gd[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (num_neg == 0) throw ConfigError("num_neg must be >= 1");
  if (!(margin > 0.0) || !std::isfinite(margin)) throw ConfigError("margin must be positive");
  if (!(optimizer.learning_rate > 0.0) || !std::isfinite(optimizer.learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  for (const auto& m : metrics) Metric::parse(m);
}

namespace {

template <typename T>
T get_field(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("train config field '") + key + "' has the wrong type");
  }
}

std::size_t get_count(const nlohmann::json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(std::string("train config field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  static const std::set<std::string> known = {"loss",       "margin",  "optimizer", "learning_rate",
                                              "epochs",     "batch_size", "num_neg", "seed",
                                              "metrics"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown train config field '" + key + "'");
  }
  c.loss = parse_loss(get_field<std::string>(j, "loss", std::string(loss_name(c.loss))));
  c.margin = get_field<double>(j, "margin", c.margin);
  c.optimizer.kind =
      parse_optimizer(get_field<std::string>(j, "optimizer", std::string(optimizer_name(c.optimizer.kind))));
  c.optimizer.learning_rate = get_field<double>(j, "learning_rate", c.optimizer.learning_rate);
  c.epochs = get_count(j, "epochs", c.epochs);
  c.batch_size = get_count(j, "batch_size", c.batch_size);
  c.num_neg = get_count(j, "num_neg", c.num_neg);
  c.seed = get_count(j, "seed", c.seed);
  c.metrics = get_field<std::vector<std::string>>(j, "metrics", c.metrics);
  c.validate();
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"loss", loss_name(loss)},
          {"margin", margin},
          {"optimizer", optimizer_name(optimizer.kind)},
          {"learning_rate", optimizer.learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"num_neg", num_neg},
          {"seed", seed},
          {"metrics", metrics}};
}

const Schema& train_config_schema() {
  static const Schema schema = [] {
    auto num = [](std::string name, ParamType t, double lo, double hi, nlohmann::json def,
                  std::string doc) {
      HyperParamSpec p;
      p.name = std::move(name);
      p.type = t;
      p.low = lo;
      p.high = hi;
      p.default_value = std::move(def);
      p.description = std::move(doc);
      return p;
    };
    auto cat = [](std::string name, std::vector<nlohmann::json> choices, nlohmann::json def,
                  std::string doc) {
      HyperParamSpec p;
      p.name = std::move(name);
      p.type = ParamType::kCategorical;
      p.choices = std::move(choices);
      p.default_value = std::move(def);
      p.description = std::move(doc);
      return p;
    };
    return Schema{
        num("learning_rate", ParamType::kFloat, 1e-8, 1e3, 1e-3, "optimizer step size"),
        cat("optimizer", {"adam", "sgd"}, "adam", "update rule"),
        num("epochs", ParamType::kInt, 1, 1000, 10, "passes over the training pack"),
        num("batch_size", ParamType::kInt, 1, 4096, 32, "instances per update"),
        num("margin", ParamType::kFloat, 1e-3, 10.0, 1.0, "pairwise hinge margin"),
        num("num_neg", ParamType::kInt, 1, 100, 1, "negatives drawn per positive"),
        cat("loss", {"pairwise_hinge", "listwise_softmax_ce", "mse", "bce"}, "pairwise_hinge",
            "training objective"),
    };
  }();
  return schema;
}

TrainConfig apply_train_params(TrainConfig base, const nlohmann::json& values) {
  if (values.is_null()) return base;
  if (!values.is_object()) throw ConfigError("training parameters must be a JSON object");
  for (const auto& spec : train_config_schema()) {
    if (!values.contains(spec.name)) continue;
    const auto& v = values.at(spec.name);
    if (auto why = spec.check(v); !why.empty()) {
      throw ConfigError("invalid training parameter " + spec.name + " (" + why + ")");
    }
    if (spec.name == "learning_rate") base.optimizer.learning_rate = v.get<double>();
    else if (spec.name == "optimizer") base.optimizer.kind = parse_optimizer(v.get<std::string>());
    else if (spec.name == "epochs") base.epochs = v.get<std::size_t>();
    else if (spec.name == "batch_size") base.batch_size = v.get<std::size_t>();
    else if (spec.name == "margin") base.margin = v.get<double>();
    else if (spec.name == "num_neg") base.num_neg = v.get<std::size_t>();
    else if (spec.name == "loss") base.loss = parse_loss(v.get<std::string>());
  }
  return base;
}

nlohmann::json EpochEvent::to_json() const {
  return {{"epoch", epoch}, {"loss", loss}, {"metrics", metrics}, {"seconds", seconds}};
}

EpochEvent EpochEvent::from_json(const nlohmann::json& j) {
  EpochEvent e;
  e.epoch = j.at("epoch").get<std::size_t>();
  e.loss = j.at("loss").is_null() ? std::nan("") : j.at("loss").get<double>();
  for (const auto& [k, v] : j.at("metrics").items()) {
    e.metrics[k] = v.is_null() ? std::nan("") : v.get<double>();
  }
  e.seconds = j.value("seconds", 0.0);
  return e;
}

// ---------------------------------------------------------------------------
// Training

namespace {

std::vector<Batch> epoch_batches(const DataPack& pack, const TrainConfig& c, std::size_t epoch) {
  const std::uint64_t seed = derive_seed(c.seed, epoch);
  switch (c.batch_mode()) {
    case BatchMode::kPointwise: return pointwise_batches(pack, c.batch_size, seed);
    case BatchMode::kPairwise: return pairwise_batches(pack, c.num_neg, c.batch_size, seed);
    case BatchMode::kListwise: {
      std::vector<Batch> out;
      for (auto& b : listwise_batches(pack, c.batch_size, seed)) {
        bool any = false;
        for (const auto& grp : b.groups) {
          std::vector<double> l(grp.labels.begin(), grp.labels.end());
          any = any || group_qualifies(l);
        }
        if (any) out.push_back(std::move(b));
      }
      if (out.empty()) {
        throw ConfigError("no query has at least 2 documents and a positive label for listwise training");
      }
      return out;
    }
  }
  return {};
}

NodeId batch_loss(Graph& g, MatchingModel& model, const DataPack& pack, const Batch& b,
                  const TrainConfig& c) {
  std::vector<TextPair> pairs;
  switch (b.mode) {
    case BatchMode::kPointwise: {
      std::vector<double> labels;
      for (const auto& r : b.points) {
        pairs.emplace_back(&pack.left(r.left_id), &pack.right(r.right_id));
        labels.push_back(static_cast<double>(r.label));
      }
      NodeId s = model.build_scores(g, pairs);
      return c.loss == LossKind::kBce ? bce_loss(g, s, labels) : mse_loss(g, s, labels);
    }
    case BatchMode::kPairwise: {
      const std::size_t n = b.pairs.size();
      for (const auto& p : b.pairs) pairs.emplace_back(&pack.left(p.left_id), &pack.right(p.positive_id));
      for (const auto& p : b.pairs) pairs.emplace_back(&pack.left(p.left_id), &pack.right(p.negative_id));
      NodeId s = model.build_scores(g, pairs);
      std::vector<std::size_t> pos(n), neg(n);
      std::iota(pos.begin(), pos.end(), 0);
      std::iota(neg.begin(), neg.end(), n);
      return pairwise_hinge_loss(g, g.gather_rows(s, pos), g.gather_rows(s, neg), n, c.margin);
    }
    case BatchMode::kListwise: {
      std::vector<std::vector<double>> labels;
      std::vector<std::pair<std::size_t, std::size_t>> ranges;
      for (const auto& grp : b.groups) {
        ranges.emplace_back(pairs.size(), grp.right_ids.size());
        for (const auto& rid : grp.right_ids) pairs.emplace_back(&pack.left(grp.left_id), &pack.right(rid));
        labels.emplace_back(grp.labels.begin(), grp.labels.end());
      }
      NodeId s = model.build_scores(g, pairs);
      std::vector<NodeId> groups;
      for (auto [start, len] : ranges) {
        std::vector<std::size_t> rows(len);
        std::iota(rows.begin(), rows.end(), start);
        groups.push_back(g.gather_rows(s, rows));
      }
      return listwise_softmax_ce_loss(g, groups, labels);
    }
  }
  throw ConfigError("unsupported batch mode");
}

}  // namespace

TrainResult train(MatchingModel& model, const DataPack& train_pack, const DataPack* valid,
                  const TrainConfig& config, const EventSink& sink,
                  const std::atomic<bool>* cancel) {
  config.validate();
  Optimizer optimizer(config.optimizer);
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& batch : epoch_batches(train_pack, config, epoch)) {
      if (cancel != nullptr && cancel->load()) {
        result.cancelled = true;
        return result;
      }
      Graph g;
      NodeId loss = batch_loss(g, model, train_pack, batch, config);
      g.evaluate();
      const double value = g.value(loss).item();
      if (!std::isfinite(value)) {
        result.failed = true;
        result.error = "training loss became non-finite in epoch " + std::to_string(epoch);
        return result;
      }
      try {
        optimizer.step(model.parameters(), g.backward(loss));
      } catch (const DivergenceError& e) {
        result.failed = true;
        result.error = std::string(e.what()) + " in epoch " + std::to_string(epoch);
        return result;
      }
      total += value * static_cast<double>(batch.size());
      count += batch.size();
    }
    EpochEvent event;
    event.epoch = epoch;
    event.loss = total / static_cast<double>(count);
    if (valid != nullptr) event.metrics = evaluate(model, *valid, config.metrics);
    event.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(event);
    if (sink) sink(event);
  }
  return result;
}

double training_loss(MatchingModel& model, const DataPack& pack, const TrainConfig& config) {
  config.validate();
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& batch : epoch_batches(pack, config, 1)) {
    Graph g;
    NodeId loss = batch_loss(g, model, pack, batch, config);
    g.evaluate();
    total += g.value(loss).item() * static_cast<double>(batch.size());
    count += batch.size();
  }
  return total / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Evaluation

std::map<std::string, RankedList> rank_pack(MatchingModel& model, const DataPack& pack) {
  std::map<std::string, std::vector<const Relation*>> by_query;
  for (const auto& r : pack.relations()) by_query[r.left_id].push_back(&r);
  std::map<std::string, RankedList> out;
  for (const auto& [qid, rels] : by_query) {
    std::vector<TextPair> pairs;
    for (const auto* r : rels) pairs.emplace_back(&pack.left(r->left_id), &pack.right(r->right_id));
    const auto scores = model.score_batch(pairs);
    RankedList list;
    for (std::size_t i = 0; i < rels.size(); ++i) {
      list.push_back({rels[i]->right_id, scores[i], rels[i]->label});
    }
    sort_ranked(list);
    out.emplace(qid, std::move(list));
  }
  return out;
}

std::map<std::string, double> evaluate_rankings(const std::map<std::string, RankedList>& rankings,
                                                const std::vector<std::string>& metrics) {
  if (metrics.empty()) throw ConfigError("evaluate needs at least one metric");
  if (rankings.empty()) throw ConfigError("evaluate needs at least one query");
  std::vector<Metric> parsed;
  for (const auto& m : metrics) parsed.push_back(Metric::parse(m));
  std::map<std::string, double> out;
  for (const auto& m : parsed) {
    double sum = 0.0;
    for (const auto& [qid, list] : rankings) sum += m(ranked_labels(list));
    out[m.name()] = sum / static_cast<double>(rankings.size());
  }
  return out;
}

std::map<std::string, double> evaluate(MatchingModel& model, const DataPack& pack,
                                       const std::vector<std::string>& metrics) {
  if (metrics.empty()) throw ConfigError("evaluate needs at least one metric");
  for (const auto& m : metrics) Metric::parse(m);
  return evaluate_rankings(rank_pack(model, pack), metrics);
}

}  // namespace textmatch
