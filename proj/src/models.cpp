#include "textmatch/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "textmatch/errors.hpp"
#include "textmatch/layers.hpp"
#include "textmatch/random.hpp"

namespace textmatch {

std::string_view family_name(Family f) {
  return f == Family::kRepresentation ? "representation" : "interaction";
}

// ---------------------------------------------------------------------------
// Registry

nlohmann::json ModelSpec::defaults() const { return resolve_params(schema, nullptr, id); }

nlohmann::json ModelSpec::resolve(const nlohmann::json& overrides) const {
  return resolve_params(schema, overrides, id);
}

nlohmann::json ModelSpec::summary_json() const {
  return {{"id", id}, {"name", display_name}, {"family", family_name(family)},
          {"description", description}};
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j = summary_json();
  j["hyper_parameters"] = nlohmann::json::array();
  for (const auto& p : schema) j["hyper_parameters"].push_back(p.to_json());
  return j;
}

namespace {

HyperParamSpec int_param(std::string name, double lo, double hi, std::int64_t def, std::string doc) {
  HyperParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::kInt;
  p.low = lo;
  p.high = hi;
  p.default_value = def;
  p.description = std::move(doc);
  return p;
}

HyperParamSpec float_param(std::string name, double lo, double hi, double def, std::string doc) {
  HyperParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::kFloat;
  p.low = lo;
  p.high = hi;
  p.default_value = def;
  p.description = std::move(doc);
  return p;
}

HyperParamSpec choice_param(std::string name, std::vector<nlohmann::json> choices,
                            nlohmann::json def, std::string doc) {
  HyperParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::kCategorical;
  p.choices = std::move(choices);
  p.default_value = std::move(def);
  p.description = std::move(doc);
  return p;
}

std::vector<ModelSpec> make_registry() {
  std::vector<ModelSpec> specs;
  specs.push_back(ModelSpec{
      "drmm",
      "DRMM",
      Family::kInteraction,
      "Deep Relevance Matching Model. Each query term's cosine similarities against the "
      "document terms are bucketed into a log-count matching histogram, a small feed-forward "
      "network turns every histogram into a term score, and an IDF-driven softmax gate weights "
      "the term scores into the final match score. Embeddings stay frozen.",
      {int_param("hist_bins", 2, 100, 30, "histogram bins, the last one holding exact matches"),
       choice_param("hist_mode", {"lch", "nh", "ch"}, "lch",
                    "log-count, normalised or raw count histogram"),
       int_param("hidden_size", 1, 64, 5, "width of the hidden feed-forward layer"),
       int_param("embedding_dim", 2, 512, 50, "word embedding dimension")}});
  specs.push_back(ModelSpec{
      "dssm",
      "DSSM",
      Family::kRepresentation,
      "Deep Structured Semantic Model. Words are hashed into letter trigrams; each text becomes a "
      "trigram frequency vector that a shared stack of tanh dense layers maps to a semantic "
      "vector. The match score is the cosine of the two vectors.",
      {choice_param("layer_widths", {"300,300,128", "300,128", "128,64", "64,32", "32"},
                    "300,300,128", "widths of the shared dense tower")}});
  specs.push_back(ModelSpec{
      "knrm",
      "K-NRM",
      Family::kInteraction,
      "Kernel-based Neural Ranking Model. A cosine translation matrix between the word "
      "embeddings of both texts is soft-counted by Gaussian kernels (one for exact matches, the "
      "rest on an even grid of similarity levels); log-summed kernel features feed a tanh "
      "learning-to-rank layer.",
      {int_param("kernel_num", 2, 41, 11, "number of kernels including the exact-match kernel"),
       float_param("sigma", 0.001, 1.0, 0.1, "width of the soft kernels"),
       float_param("exact_sigma", 0.0001, 0.1, 0.001, "width of the exact-match kernel"),
       int_param("embedding_dim", 2, 512, 50, "word embedding dimension"),
       choice_param("train_embeddings", {true, false}, true, "update embeddings during training")}});
  return specs;
}

}  // namespace

const std::vector<ModelSpec>& model_registry() {
  static const std::vector<ModelSpec> registry = make_registry();
  return registry;
}

const ModelSpec& find_model_spec(std::string_view id) {
  for (const auto& s : model_registry()) {
    if (s.id == id) return s;
  }
  throw ConfigError("unknown model '" + std::string(id) + "'");
}

nlohmann::json Explanation::to_json() const {
  nlohmann::json j = {{"family", family_name(family)}, {"score", score}};
  if (family == Family::kRepresentation) {
    j["left_vector"] = left_vector;
    j["right_vector"] = right_vector;
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < interaction.rows(); ++i) {
      auto r = interaction.row_span(i);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j["interaction"] = rows;
    j["left_ids"] = left_ids;
    j["right_ids"] = right_ids;
  }
  j["weights"] = weights;
  return j;
}

std::vector<std::size_t> parse_widths(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string piece(text.substr(pos, comma - pos));
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(piece, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != piece.size() || v == 0) {
      throw ConfigError("invalid layer width list '" + std::string(text) + "'");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// MatchingModel

NodeId MatchingModel::param_node(Graph& g, std::map<std::string, NodeId>& cache,
                                 std::string_view name) {
  auto it = cache.find(std::string(name));
  if (it != cache.end()) return it->second;
  NodeId id = g.parameter(params_.at(name));
  cache.emplace(std::string(name), id);
  return id;
}

std::vector<double> MatchingModel::score_batch(std::span<const TextPair> pairs) {
  if (pairs.empty()) return {};
  Graph g;
  NodeId s = build_scores(g, pairs);
  g.evaluate();
  const Tensor& v = g.value(s);
  return {v.data().begin(), v.data().end()};
}

double MatchingModel::score(const Datum& left, const Datum& right) {
  const TextPair pair{&left, &right};
  return score_batch(std::span<const TextPair>(&pair, 1)).front();
}

namespace {

Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({fan_in, fan_out});
  for (auto& v : t.data()) v = rng.uniform(-a, a);
  return t;
}

// Token ids with padding removed.
std::vector<std::size_t> content_ids(const Datum& d, std::size_t vocab_size, const char* side) {
  const auto* idx = std::get_if<Indices>(&d);
  if (idx == nullptr) {
    throw ConfigError(std::string(side) + " input must be an index sequence, got " +
                      std::string(category_name(category_of(d))));
  }
  std::vector<std::size_t> out;
  for (auto i : *idx) {
    if (i == kPaddingIndex) continue;
    if (i < 0 || static_cast<std::size_t>(i) >= vocab_size) {
      throw ConfigError(std::string(side) + " token index " + std::to_string(i) +
                        " is outside the vocabulary");
    }
    out.push_back(static_cast<std::size_t>(i));
  }
  if (out.empty()) throw ConfigError(std::string(side) + " text has no tokens after processing");
  return out;
}

const TrigramCounts& trigram_input(const Datum& d, std::size_t dim, const char* side) {
  const auto* c = std::get_if<TrigramCounts>(&d);
  if (c == nullptr) {
    throw ConfigError(std::string(side) + " input must be trigram counts, got " +
                      std::string(category_name(category_of(d))));
  }
  if (c->dimension != dim) {
    throw ConfigError(std::string(side) + " trigram vector has dimension " +
                      std::to_string(c->dimension) + ", model expects " + std::to_string(dim));
  }
  return *c;
}

Tensor rows_of(const Tensor& table, const std::vector<std::size_t>& rows) {
  Tensor out({rows.size(), table.cols()});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = table.row_span(rows[r]);
    std::copy(src.begin(), src.end(), out.data().begin() + r * table.cols());
  }
  return out;
}

std::vector<double> flat(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

std::vector<std::int64_t> as_ids(const std::vector<std::size_t>& ids) {
  return {ids.begin(), ids.end()};
}

const Tensor& require_embeddings(const ModelContext& ctx, std::size_t dim, const char* model) {
  if (!ctx.embeddings) throw ConfigError(std::string(model) + " needs an embedding matrix");
  const Tensor& e = *ctx.embeddings;
  if (e.rank() != 2 || e.cols() != dim) {
    throw ConfigError(std::string(model) + " embedding matrix has shape " + shape_string(e.shape()) +
                      ", expected " + std::to_string(dim) + " columns");
  }
  if (e.rows() < 2) throw ConfigError(std::string(model) + " embedding matrix needs >= 2 rows");
  return e;
}

// ---------------------------------------------------------------------------
// DSSM

class Dssm final : public MatchingModel {
 public:
  Dssm(const ModelSpec& spec, nlohmann::json hp, const ModelContext& ctx, std::uint64_t seed)
      : MatchingModel(spec, std::move(hp)) {
    if (ctx.trigram_dim < 1) throw ConfigError("dssm needs a fitted trigram vocabulary");
    dim_ = ctx.trigram_dim;
    widths_ = parse_widths(hp_.at("layer_widths").get<std::string>());
    Rng rng(seed);
    std::size_t in = dim_;
    for (std::size_t i = 0; i < widths_.size(); ++i) {
      params_.add(weight_name(i), glorot(rng, in, widths_[i]));
      params_.add(bias_name(i), Tensor({1, widths_[i]}, 0.0));
      in = widths_[i];
    }
  }

  NodeId build_scores(Graph& g, std::span<const TextPair> pairs) override {
    std::map<std::string, NodeId> cache;
    auto [left, right] = representations(g, cache, pairs);
    return g.sum_axis(g.mul(g.l2_normalize_rows(left), g.l2_normalize_rows(right)), 1);
  }

  Explanation explain(const Datum& left, const Datum& right) override {
    const TextPair pair{&left, &right};
    Graph g;
    std::map<std::string, NodeId> cache;
    auto [l, r] = representations(g, cache, std::span<const TextPair>(&pair, 1));
    NodeId s = g.sum_axis(g.mul(g.l2_normalize_rows(l), g.l2_normalize_rows(r)), 1);
    g.evaluate();
    Explanation e;
    e.family = Family::kRepresentation;
    e.score = g.value(s).item();
    e.left_vector = flat(g.value(l));
    e.right_vector = flat(g.value(r));
    return e;
  }

  std::unique_ptr<MatchingModel> clone() const override { return std::make_unique<Dssm>(*this); }

 private:
  static std::string weight_name(std::size_t i) { return "tower." + std::to_string(i) + ".weight"; }
  static std::string bias_name(std::size_t i) { return "tower." + std::to_string(i) + ".bias"; }

  Tensor counts_matrix(std::span<const TextPair> pairs, bool left_side) const {
    Tensor x({pairs.size(), dim_});
    for (std::size_t r = 0; r < pairs.size(); ++r) {
      const Datum& d = left_side ? *pairs[r].first : *pairs[r].second;
      for (const auto& [idx, count] : trigram_input(d, dim_, left_side ? "left" : "right").entries) {
        if (idx >= dim_) throw ConfigError("trigram index outside the model's vocabulary");
        x.at(r, idx) = count;
      }
    }
    return x;
  }

  NodeId tower(Graph& g, std::map<std::string, NodeId>& cache, NodeId x, std::size_t rows) {
    for (std::size_t i = 0; i < widths_.size(); ++i) {
      x = g.tanh(dense(g, x, param_node(g, cache, weight_name(i)),
                       param_node(g, cache, bias_name(i)), rows));
    }
    return x;
  }

  std::pair<NodeId, NodeId> representations(Graph& g, std::map<std::string, NodeId>& cache,
                                            std::span<const TextPair> pairs) {
    NodeId xl = g.constant(counts_matrix(pairs, true));
    NodeId xr = g.constant(counts_matrix(pairs, false));
    return {tower(g, cache, xl, pairs.size()), tower(g, cache, xr, pairs.size())};
  }

  std::size_t dim_ = 0;
  std::vector<std::size_t> widths_;
};

// ---------------------------------------------------------------------------
// DRMM

class Drmm final : public MatchingModel {
 public:
  Drmm(const ModelSpec& spec, nlohmann::json hp, const ModelContext& ctx, std::uint64_t seed)
      : MatchingModel(spec, std::move(hp)) {
    const auto dim = hp_.at("embedding_dim").get<std::size_t>();
    const Tensor& emb = require_embeddings(ctx, dim, "drmm");
    if (!ctx.idf) throw ConfigError("drmm needs idf weights");
    if (ctx.idf->size() != emb.rows()) {
      throw ConfigError("drmm idf table size differs from the embedding rows");
    }
    bins_ = hp_.at("hist_bins").get<std::size_t>();
    mode_ = parse_histogram_mode(hp_.at("hist_mode").get<std::string>());
    const auto hidden = hp_.at("hidden_size").get<std::size_t>();
    Rng rng(seed);
    params_.add("embedding", emb, false);
    params_.add("idf", Tensor::column(*ctx.idf), false);
    params_.add("ffn.0.weight", glorot(rng, bins_, hidden));
    params_.add("ffn.0.bias", Tensor({1, hidden}, 0.0));
    params_.add("ffn.1.weight", glorot(rng, hidden, 1));
    params_.add("ffn.1.bias", Tensor({1, 1}, 0.0));
    params_.add("gate.weight", Tensor({1, 1}, rng.uniform(-0.1, 0.1)));
  }

  NodeId build_scores(Graph& g, std::span<const TextPair> pairs) override {
    std::map<std::string, NodeId> cache;
    std::vector<NodeId> scores;
    for (const auto& [left, right] : pairs) {
      scores.push_back(pair_score(g, cache, *left, *right).score);
    }
    return g.concat_axis(scores, 0);
  }

  Explanation explain(const Datum& left, const Datum& right) override {
    Graph g;
    std::map<std::string, NodeId> cache;
    auto nodes = pair_score(g, cache, left, right);
    g.evaluate();
    Explanation e;
    e.family = Family::kInteraction;
    e.score = g.value(nodes.score).item();
    e.interaction = nodes.matrix;
    e.left_ids = as_ids(nodes.left);
    e.right_ids = as_ids(nodes.right);
    e.weights["gates"] = flat(g.value(nodes.gates));
    e.weights["ffn.1.weight"] = flat(params_.at("ffn.1.weight").tensor);
    return e;
  }

  std::unique_ptr<MatchingModel> clone() const override { return std::make_unique<Drmm>(*this); }

 private:
  struct PairNodes {
    NodeId score;
    NodeId gates;
    Tensor matrix;
    std::vector<std::size_t> left, right;
  };

  PairNodes pair_score(Graph& g, std::map<std::string, NodeId>& cache, const Datum& left,
                       const Datum& right) {
    const Tensor& emb = params_.at("embedding").tensor;
    PairNodes out;
    out.left = content_ids(left, emb.rows(), "left");
    out.right = content_ids(right, emb.rows(), "right");
    const std::size_t n = out.left.size();
    out.matrix = matching_matrix(rows_of(emb, out.left), rows_of(emb, out.right), MatchMode::kCosine);

    Tensor hist({n, bins_});
    for (std::size_t i = 0; i < n; ++i) {
      auto h = matching_histogram(out.matrix.row_span(i), bins_, mode_);
      std::copy(h.begin(), h.end(), hist.data().begin() + i * bins_);
    }
    NodeId hidden = g.tanh(dense(g, g.constant(std::move(hist)), param_node(g, cache, "ffn.0.weight"),
                                 param_node(g, cache, "ffn.0.bias"), n));
    NodeId term_scores = g.tanh(dense(g, hidden, param_node(g, cache, "ffn.1.weight"),
                                      param_node(g, cache, "ffn.1.bias"), n));
    NodeId idf = g.gather_rows(param_node(g, cache, "idf"), out.left);  // n x 1
    out.gates = g.softmax_rows(g.matmul(param_node(g, cache, "gate.weight"), idf, true));  // 1 x n
    out.score = g.matmul(out.gates, term_scores);
    return out;
  }

  std::size_t bins_ = 30;
  HistogramMode mode_ = HistogramMode::kLogCount;
};

// ---------------------------------------------------------------------------
// KNRM

class Knrm final : public MatchingModel {
 public:
  Knrm(const ModelSpec& spec, nlohmann::json hp, const ModelContext& ctx, std::uint64_t seed)
      : MatchingModel(spec, std::move(hp)),
        bank_(KernelBank::standard(hp_.at("kernel_num").get<std::size_t>(),
                                   hp_.at("sigma").get<double>(),
                                   hp_.at("exact_sigma").get<double>())) {
    const auto dim = hp_.at("embedding_dim").get<std::size_t>();
    const Tensor& emb = require_embeddings(ctx, dim, "knrm");
    Rng rng(seed);
    params_.add("embedding", emb, hp_.at("train_embeddings").get<bool>());
    Tensor w({bank_.size(), 1});
    // Kernel features reach magnitudes of tens; small weights keep tanh
    // out of saturation at the start of training.
    for (auto& v : w.data()) v = rng.uniform(-0.01, 0.01);
    params_.add("out.weight", std::move(w));
    params_.add("out.bias", Tensor({1, 1}, 0.0));
  }

  NodeId build_scores(Graph& g, std::span<const TextPair> pairs) override {
    std::map<std::string, NodeId> cache;
    std::vector<NodeId> features;
    for (const auto& [left, right] : pairs) {
      features.push_back(pair_features(g, cache, *left, *right).features);
    }
    return output(g, cache, g.concat_axis(features, 0), pairs.size());
  }

  Explanation explain(const Datum& left, const Datum& right) override {
    Graph g;
    std::map<std::string, NodeId> cache;
    auto nodes = pair_features(g, cache, left, right);
    NodeId s = output(g, cache, nodes.features, 1);
    g.evaluate();
    Explanation e;
    e.family = Family::kInteraction;
    e.score = g.value(s).item();
    e.interaction = g.value(nodes.matrix);
    e.left_ids = as_ids(nodes.left);
    e.right_ids = as_ids(nodes.right);
    e.weights["out.weight"] = flat(params_.at("out.weight").tensor);
    e.weights["kernel_features"] = flat(g.value(nodes.features));
    return e;
  }

  std::unique_ptr<MatchingModel> clone() const override { return std::make_unique<Knrm>(*this); }

 private:
  struct PairNodes {
    NodeId features;
    NodeId matrix;
    std::vector<std::size_t> left, right;
  };

  PairNodes pair_features(Graph& g, std::map<std::string, NodeId>& cache, const Datum& left,
                          const Datum& right) {
    const std::size_t vocab = params_.at("embedding").tensor.rows();
    PairNodes out;
    out.left = content_ids(left, vocab, "left");
    out.right = content_ids(right, vocab, "right");
    NodeId emb = param_node(g, cache, "embedding");
    out.matrix = matching_matrix(g, g.gather_rows(emb, out.left), g.gather_rows(emb, out.right),
                                 MatchMode::kCosine);
    out.features = kernel_pooling(g, out.matrix, out.left.size(), out.right.size(), bank_);
    return out;
  }

  NodeId output(Graph& g, std::map<std::string, NodeId>& cache, NodeId features, std::size_t rows) {
    return g.tanh(dense(g, features, param_node(g, cache, "out.weight"),
                        param_node(g, cache, "out.bias"), rows));
  }

  KernelBank bank_;
};

}  // namespace

std::unique_ptr<MatchingModel> build_dssm(const nlohmann::json& hp, const ModelContext& ctx,
                                          std::uint64_t seed) {
  const ModelSpec& spec = find_model_spec("dssm");
  return std::make_unique<Dssm>(spec, spec.resolve(hp), ctx, seed);
}

std::unique_ptr<MatchingModel> build_drmm(const nlohmann::json& hp, const ModelContext& ctx,
                                          std::uint64_t seed) {
  const ModelSpec& spec = find_model_spec("drmm");
  return std::make_unique<Drmm>(spec, spec.resolve(hp), ctx, seed);
}

std::unique_ptr<MatchingModel> build_knrm(const nlohmann::json& hp, const ModelContext& ctx,
                                          std::uint64_t seed) {
  const ModelSpec& spec = find_model_spec("knrm");
  return std::make_unique<Knrm>(spec, spec.resolve(hp), ctx, seed);
}

std::unique_ptr<MatchingModel> build_model(std::string_view model_id, const nlohmann::json& hp,
                                           const ModelContext& ctx, std::uint64_t seed) {
  if (model_id == "dssm") return build_dssm(hp, ctx, seed);
  if (model_id == "drmm") return build_drmm(hp, ctx, seed);
  if (model_id == "knrm") return build_knrm(hp, ctx, seed);
  throw ConfigError("unknown model '" + std::string(model_id) + "'");
}

std::unique_ptr<MatchingModel> restore_model(std::string_view model_id, const nlohmann::json& hp,
                                             const ParameterSet& params) {
  ModelContext ctx;
  if (params.contains("embedding")) {
    ctx.embeddings = params.at("embedding").tensor;
    ctx.vocab_size = ctx.embeddings->rows();
  }
  if (params.contains("idf")) {
    const auto& t = params.at("idf").tensor;
    ctx.idf = std::vector<double>(t.data().begin(), t.data().end());
  }
  if (params.contains("tower.0.weight")) ctx.trigram_dim = params.at("tower.0.weight").tensor.rows();

  auto model = build_model(model_id, hp, ctx, 0);
  std::set<std::string> expected;
  for (auto& p : model->parameters()) {
    expected.insert(p.name);
    if (!params.contains(p.name)) throw LoadError("missing parameter '" + p.name + "'");
    const Tensor& src = params.at(p.name).tensor;
    if (src.shape() != p.tensor.shape()) {
      throw LoadError("parameter '" + p.name + "' has shape " + shape_string(src.shape()) +
                      ", expected " + shape_string(p.tensor.shape()));
    }
    p.tensor = src;
  }
  for (const auto& p : params) {
    if (!expected.contains(p.name)) throw LoadError("unexpected parameter '" + p.name + "'");
  }
  return model;
}

}  // namespace textmatch
