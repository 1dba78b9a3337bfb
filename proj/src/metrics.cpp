#include "textmatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "textmatch/errors.hpp"

namespace textmatch {

RankedList rank(const std::map<std::string, double>& scores,
                const std::map<std::string, std::int64_t>& labels) {
  RankedList out;
  out.reserve(scores.size());
  for (const auto& [id, s] : scores) {
    auto it = labels.find(id);
    out.push_back({id, s, it == labels.end() ? 0 : it->second});
  }
  sort_ranked(out);
  return out;
}

void sort_ranked(RankedList& items) {
  // NaN sorts last so the comparator stays a strict weak order
  auto key = [](double s) { return std::isnan(s) ? -std::numeric_limits<double>::infinity() : s; };
  std::stable_sort(items.begin(), items.end(), [&](const RankedItem& a, const RankedItem& b) {
    const double ka = key(a.score), kb = key(b.score);
    if (ka != kb) return ka > kb;
    return a.right_id < b.right_id;
  });
}

std::vector<std::int64_t> ranked_labels(const RankedList& list) {
  std::vector<std::int64_t> out;
  out.reserve(list.size());
  for (const auto& item : list) out.push_back(item.label);
  return out;
}

double precision_at_k(std::span<const std::int64_t> labels, std::size_t k) {
  if (k == 0) throw ConfigError("precision@k needs k >= 1");
  const std::size_t n = std::min(k, labels.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += labels[i] > 0 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

double average_precision(std::span<const std::int64_t> labels) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

namespace {

double mean_over(const std::vector<std::vector<std::int64_t>>& queries,
                 const std::function<double(std::span<const std::int64_t>)>& f) {
  if (queries.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& q : queries) sum += f(q);
  return sum / static_cast<double>(queries.size());
}

double dcg(std::span<const std::int64_t> labels, std::size_t k) {
  double sum = 0.0;
  const std::size_t n = std::min(k, labels.size());
  for (std::size_t i = 0; i < n; ++i) {
    sum += (std::exp2(static_cast<double>(labels[i])) - 1.0) / std::log2(static_cast<double>(i + 2));
  }
  return sum;
}

}  // namespace

double mean_average_precision(const std::vector<std::vector<std::int64_t>>& queries) {
  return mean_over(queries, average_precision);
}

double ndcg_at_k(std::span<const std::int64_t> labels, std::size_t k) {
  if (k == 0) throw ConfigError("ndcg@k needs k >= 1");
  std::vector<std::int64_t> ideal(labels.begin(), labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg(ideal, k);
  return idcg > 0.0 ? dcg(labels, k) / idcg : 0.0;
}

double reciprocal_rank(std::span<const std::int64_t> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 0) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double mean_reciprocal_rank(const std::vector<std::vector<std::int64_t>>& queries) {
  return mean_over(queries, reciprocal_rank);
}

Metric Metric::parse(std::string_view name) {
  if (name == "map") return {MetricKind::kMap, 0};
  if (name == "mrr") return {MetricKind::kMrr, 0};
  const auto at = name.find('@');
  if (at != std::string_view::npos) {
    const auto head = name.substr(0, at);
    const std::string tail(name.substr(at + 1));
    std::size_t used = 0;
    unsigned long k = 0;
    try {
      k = std::stoul(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used > 0 && used == tail.size() && k > 0 && tail.front() != '-' && tail.front() != '+') {
      if (head == "p" || head == "precision") return {MetricKind::kPrecision, k};
      if (head == "ndcg") return {MetricKind::kNdcg, k};
    }
  }
  throw ConfigError("unknown metric '" + std::string(name) +
                    "' (expected p@k, map, ndcg@k or mrr)");
}

std::string Metric::name() const {
  switch (kind) {
    case MetricKind::kPrecision: return "p@" + std::to_string(k);
    case MetricKind::kMap: return "map";
    case MetricKind::kNdcg: return "ndcg@" + std::to_string(k);
    case MetricKind::kMrr: return "mrr";
  }
  return "";
}

double Metric::operator()(std::span<const std::int64_t> labels) const {
  switch (kind) {
    case MetricKind::kPrecision: return precision_at_k(labels, k);
    case MetricKind::kMap: return average_precision(labels);
    case MetricKind::kNdcg: return ndcg_at_k(labels, k);
    case MetricKind::kMrr: return reciprocal_rank(labels);
  }
  return 0.0;
}

}  // namespace textmatch
