#include "textmatch/layers.hpp"

#include <algorithm>
#include <cmath>

#include "textmatch/errors.hpp"

namespace textmatch {

MatchMode parse_match_mode(std::string_view name) {
  if (name == "dot") return MatchMode::kDot;
  if (name == "cosine") return MatchMode::kCosine;
  if (name == "indicator") return MatchMode::kIndicator;
  throw ConfigError("unknown matching mode '" + std::string(name) + "'");
}

Tensor matching_matrix(const Tensor& left, const Tensor& right, MatchMode mode,
                       std::span<const std::int64_t> left_ids,
                       std::span<const std::int64_t> right_ids) {
  if (mode == MatchMode::kIndicator) {
    if (left_ids.empty() || right_ids.empty()) {
      throw ConfigError("indicator matching needs non-empty id sequences");
    }
    Tensor out({left_ids.size(), right_ids.size()});
    for (std::size_t i = 0; i < left_ids.size(); ++i) {
      for (std::size_t j = 0; j < right_ids.size(); ++j) {
        out.at(i, j) = left_ids[i] == right_ids[j] ? 1.0 : 0.0;
      }
    }
    return out;
  }
  if (left.cols() != right.cols()) {
    throw ShapeError("matching_matrix: vector dimensions differ (" + std::to_string(left.cols()) +
                     " vs " + std::to_string(right.cols()) + ")");
  }
  Graph g;
  auto m = matching_matrix(g, g.constant(left), g.constant(right), mode);
  g.evaluate();
  return g.value(m);
}

NodeId matching_matrix(Graph& g, NodeId left, NodeId right, MatchMode mode) {
  switch (mode) {
    case MatchMode::kDot:
      return g.matmul(left, right, true);
    case MatchMode::kCosine:
      return g.matmul(g.l2_normalize_rows(left), g.l2_normalize_rows(right), true);
    case MatchMode::kIndicator:
      break;
  }
  throw ConfigError("indicator matching is not differentiable; use the value form");
}

HistogramMode parse_histogram_mode(std::string_view name) {
  if (name == "ch") return HistogramMode::kCount;
  if (name == "nh") return HistogramMode::kNormalized;
  if (name == "lch") return HistogramMode::kLogCount;
  throw ConfigError("unknown histogram mode '" + std::string(name) + "'");
}

std::vector<double> matching_histogram(std::span<const double> similarities, std::size_t bins,
                                       HistogramMode mode) {
  if (bins < 2) throw ConfigError("matching_histogram needs at least 2 bins");
  std::vector<double> hist(bins, 0.0);
  const double width = 2.0 / static_cast<double>(bins - 1);
  for (double s : similarities) {
    const double v = std::clamp(s, -1.0, 1.0);
    std::size_t bin = bins - 1;
    if (v < 1.0) {
      bin = static_cast<std::size_t>(std::floor((v + 1.0) / width));
      bin = std::min(bin, bins - 2);
    }
    hist[bin] += 1.0;
  }
  switch (mode) {
    case HistogramMode::kCount:
      break;
    case HistogramMode::kNormalized:
      if (!similarities.empty()) {
        for (auto& h : hist) h /= static_cast<double>(similarities.size());
      }
      break;
    case HistogramMode::kLogCount:
      for (auto& h : hist) h = std::log1p(h);
      break;
  }
  return hist;
}

NodeId attention(Graph& g, NodeId x, NodeId y, NodeId w) {
  NodeId scores = g.matmul(g.matmul(x, w), y, true);
  return g.matmul(g.softmax_rows(scores), y);
}

KernelBank::KernelBank(std::vector<Kernel> kernels) : kernels_(std::move(kernels)) {
  if (kernels_.empty()) throw ConfigError("kernel bank is empty");
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    const auto& k = kernels_[i];
    if (!(k.sigma > 0.0)) throw ConfigError("kernel sigma must be positive");
    if (k.mu < -1.0 || k.mu > 1.0) throw ConfigError("kernel mu must lie in [-1, 1]");
    if (i > 0 && k.mu < kernels_[i - 1].mu) throw ConfigError("kernel mus must be non-decreasing");
  }
}

KernelBank KernelBank::standard(std::size_t count, double sigma, double exact_sigma) {
  if (count < 2) throw ConfigError("kernel bank needs at least 2 kernels");
  std::vector<Kernel> ks;
  const std::size_t soft = count - 1;
  for (std::size_t i = 0; i < soft; ++i) {
    const double mu = -1.0 + static_cast<double>(2 * i + 1) / static_cast<double>(soft);
    ks.push_back({mu, sigma});
  }
  ks.push_back({1.0, exact_sigma});
  return KernelBank(std::move(ks));
}

NodeId kernel_pooling(Graph& g, NodeId matrix, std::size_t rows, std::size_t cols,
                      const KernelBank& kernels) {
  if (rows == 0 || cols == 0) throw ShapeError("kernel_pooling needs a non-empty matrix");
  std::vector<NodeId> features;
  features.reserve(kernels.size());
  for (const auto& k : kernels.kernels()) {
    NodeId diff = g.sub(matrix, g.constant(Tensor({rows, cols}, k.mu)));
    NodeId expo = g.exp(g.scale(g.mul(diff, diff), -1.0 / (2.0 * k.sigma * k.sigma)));
    NodeId per_row = g.sum_axis(expo, 1);
    NodeId logs = g.log(g.clamp_min(per_row, kLogFloor));
    features.push_back(g.sum_axis(logs, 0));
  }
  return g.concat_axis(features, 1);
}

std::vector<double> kernel_pooling(const Tensor& matrix, const KernelBank& kernels) {
  if (matrix.empty()) throw ShapeError("kernel_pooling needs a non-empty matrix");
  if (!matrix.all_finite()) throw DomainError("kernel_pooling needs a finite matrix");
  Graph g;
  auto phi = kernel_pooling(g, g.constant(matrix), matrix.rows(), matrix.cols(), kernels);
  g.evaluate();
  const Tensor& v = g.value(phi);
  return {v.data().begin(), v.data().end()};
}

NodeId dense(Graph& g, NodeId x, NodeId weight, NodeId bias, std::size_t rows) {
  return g.add(g.matmul(x, weight), g.gather_rows(bias, std::vector<std::size_t>(rows, 0)));
}

}  // namespace textmatch
