#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <ostream>
#include <string>
#include <vector>

#include "textmatch/autodiff.hpp"
#include "textmatch/models.hpp"
#include "textmatch/random.hpp"

namespace textmatch::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(
        std::chrono::steady_clock::now().time_since_epoch().count()));
    path_ = std::filesystem::temp_directory_path() / ("textmatch_" + tag + "_" + std::to_string(rng.next()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Reduces any matrix node to a scalar through a fixed random weighting so
/// every output element contributes a distinct gradient.
inline NodeId weighted_sum(Graph& g, NodeId y, const Tensor& weights) {
  NodeId w = g.constant(weights);
  return g.sum_axis(g.sum_axis(g.mul(y, w), 0), 1);
}

struct PrimitiveCase {
  std::string name;
  std::vector<Shape> input_shapes;
  double lo = -1.0;
  double hi = 1.0;
  Shape output_shape;
  std::function<NodeId(Graph&, const std::vector<NodeId>&)> build;
};

inline void PrintTo(const PrimitiveCase& c, std::ostream* os) { *os << c.name; }

/// One case per primitive, with input domains away from kinks and poles.
inline std::vector<PrimitiveCase> primitive_cases() {
  using Inputs = std::vector<NodeId>;
  return {
      {"add", {{3, 4}, {3, 4}}, -1, 1, {3, 4}, [](Graph& g, const Inputs& x) { return g.add(x[0], x[1]); }},
      {"sub", {{3, 4}, {3, 4}}, -1, 1, {3, 4}, [](Graph& g, const Inputs& x) { return g.sub(x[0], x[1]); }},
      {"mul", {{3, 4}, {3, 4}}, -1, 1, {3, 4}, [](Graph& g, const Inputs& x) { return g.mul(x[0], x[1]); }},
      {"matmul", {{3, 4}, {4, 2}}, -1, 1, {3, 2}, [](Graph& g, const Inputs& x) { return g.matmul(x[0], x[1]); }},
      {"matmul_transposed", {{3, 4}, {5, 4}}, -1, 1, {3, 5},
       [](Graph& g, const Inputs& x) { return g.matmul(x[0], x[1], true); }},
      {"gather_rows", {{4, 3}}, -1, 1, {5, 3},
       [](Graph& g, const Inputs& x) { return g.gather_rows(x[0], {2, 0, 2, 3, 2}); }},
      {"tanh", {{3, 4}}, -2, 2, {3, 4}, [](Graph& g, const Inputs& x) { return g.tanh(x[0]); }},
      {"relu", {{3, 4}}, 0.1, 2, {3, 4}, [](Graph& g, const Inputs& x) { return g.relu(x[0]); }},
      {"relu_negative", {{3, 4}}, -2, -0.1, {3, 4}, [](Graph& g, const Inputs& x) { return g.relu(x[0]); }},
      {"sigmoid", {{3, 4}}, -3, 3, {3, 4}, [](Graph& g, const Inputs& x) { return g.sigmoid(x[0]); }},
      {"exp", {{3, 4}}, -2, 2, {3, 4}, [](Graph& g, const Inputs& x) { return g.exp(x[0]); }},
      {"log", {{3, 4}}, 0.2, 3, {3, 4}, [](Graph& g, const Inputs& x) { return g.log(x[0]); }},
      {"softmax_rows", {{3, 4}}, -2, 2, {3, 4}, [](Graph& g, const Inputs& x) { return g.softmax_rows(x[0]); }},
      {"sum_axis0", {{3, 4}}, -1, 1, {1, 4}, [](Graph& g, const Inputs& x) { return g.sum_axis(x[0], 0); }},
      {"sum_axis1", {{3, 4}}, -1, 1, {3, 1}, [](Graph& g, const Inputs& x) { return g.sum_axis(x[0], 1); }},
      {"mean_axis0", {{3, 4}}, -1, 1, {1, 4}, [](Graph& g, const Inputs& x) { return g.mean_axis(x[0], 0); }},
      {"mean_axis1", {{3, 4}}, -1, 1, {3, 1}, [](Graph& g, const Inputs& x) { return g.mean_axis(x[0], 1); }},
      {"concat_axis0", {{2, 3}, {1, 3}}, -1, 1, {3, 3},
       [](Graph& g, const Inputs& x) { return g.concat_axis({x[0], x[1]}, 0); }},
      {"concat_axis1", {{2, 3}, {2, 2}}, -1, 1, {2, 5},
       [](Graph& g, const Inputs& x) { return g.concat_axis({x[0], x[1]}, 1); }},
      {"scale", {{3, 4}}, -1, 1, {3, 4}, [](Graph& g, const Inputs& x) { return g.scale(x[0], -2.5); }},
      {"clamp_min", {{3, 4}}, -1, 1, {3, 4}, [](Graph& g, const Inputs& x) { return g.clamp_min(x[0], 0.05); }},
      {"l2_normalize_rows", {{3, 4}}, 0.1, 1, {3, 4},
       [](Graph& g, const Inputs& x) { return g.l2_normalize_rows(x[0]); }},
  };
}

/// Worst grad_check error for one primitive across `points` seeded points.
inline GradCheckResult check_primitive(const PrimitiveCase& c, std::uint64_t seed,
                                       std::size_t points, double step) {
  GradCheckResult worst;
  for (std::size_t p = 0; p < points; ++p) {
    Rng rng(derive_seed(seed, p));
    Graph g;
    std::vector<NodeId> inputs;
    Bindings point;
    for (std::size_t i = 0; i < c.input_shapes.size(); ++i) {
      const std::string name = "x" + std::to_string(i);
      inputs.push_back(g.input(name));
      Tensor t = random_tensor(rng, c.input_shapes[i], c.lo, c.hi);
      if (c.name == "clamp_min") {
        // keep every element at least 1e-3 away from the floor
        for (auto& v : t.data()) {
          if (std::abs(v - 0.05) < 1e-3) v += 2e-3;
        }
      }
      point.emplace(name, std::move(t));
    }
    NodeId y = c.build(g, inputs);
    NodeId out = weighted_sum(g, y, random_tensor(rng, c.output_shape));
    auto r = grad_check(g, out, point, step);
    if (r.max_relative_error >= worst.max_relative_error) worst.max_relative_error = r.max_relative_error;
    worst.checked += r.checked;
    worst.excluded.insert(worst.excluded.end(), r.excluded.begin(), r.excluded.end());
  }
  return worst;
}

/// Random embeddings (padding row zero) and idf weights for interaction models.
inline ModelContext interaction_context(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  ModelContext ctx;
  ctx.vocab_size = vocab;
  Tensor emb = random_tensor(rng, {vocab, dim}, -0.5, 0.5);
  for (std::size_t j = 0; j < dim; ++j) emb.at(0, j) = 0.0;
  ctx.embeddings = std::move(emb);
  std::vector<double> idf(vocab);
  for (auto& v : idf) v = rng.uniform(1.0, 3.0);
  ctx.idf = std::move(idf);
  return ctx;
}

inline Indices random_indices(Rng& rng, std::size_t vocab, std::size_t max_len) {
  Indices out(1 + rng.index(max_len));
  for (auto& i : out) i = static_cast<std::int64_t>(2 + rng.index(vocab - 2));
  return out;
}

inline TrigramCounts random_trigrams(Rng& rng, std::size_t dim, std::size_t max_terms) {
  TrigramCounts c;
  c.dimension = dim;
  std::map<std::size_t, double> counts;
  const std::size_t n = 1 + rng.index(max_terms);
  for (std::size_t i = 0; i < n; ++i) counts[1 + rng.index(dim - 1)] += 1.0;
  c.entries.assign(counts.begin(), counts.end());
  return c;
}

/// A small seeded model with four random input pairs.
struct ModelFixture {
  std::unique_ptr<MatchingModel> model;
  std::vector<Datum> left, right;
};

inline ModelFixture model_fixture(const std::string& id, std::uint64_t seed) {
  Rng rng(seed);
  ModelFixture f;
  if (id == "dssm") {
    ModelContext ctx;
    ctx.trigram_dim = 25;
    f.model = build_model(id, {{"layer_widths", "32"}}, ctx, seed);
    for (int i = 0; i < 4; ++i) {
      f.left.emplace_back(random_trigrams(rng, 25, 6));
      f.right.emplace_back(random_trigrams(rng, 25, 6));
    }
  } else {
    f.model = build_model(id, {{"embedding_dim", 4}}, interaction_context(12, 4, seed), seed);
    for (int i = 0; i < 4; ++i) {
      f.left.emplace_back(random_indices(rng, 12, 4));
      f.right.emplace_back(random_indices(rng, 12, 6));
    }
  }
  return f;
}

inline std::vector<TextPair> fixture_pairs(const ModelFixture& f) {
  std::vector<TextPair> out;
  for (std::size_t i = 0; i < f.left.size(); ++i) out.emplace_back(&f.left[i], &f.right[i]);
  return out;
}

/// Finite-difference check of the summed, randomly weighted scores of `pairs`
/// with respect to every trainable parameter of `model`.
inline GradCheckResult check_model(MatchingModel& model, std::span<const TextPair> pairs, Rng& rng,
                                   double step = 1e-5) {
  Graph g;
  NodeId s = model.build_scores(g, pairs);
  NodeId out = weighted_sum(g, s, random_tensor(rng, {pairs.size(), 1}));
  return grad_check(g, out, {}, step);
}

}  // namespace textmatch::testing
