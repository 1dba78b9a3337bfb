#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace textmatch {

struct RankedItem {
  std::string right_id;
  double score = 0.0;
  std::int64_t label = 0;
  friend bool operator==(const RankedItem&, const RankedItem&) = default;
};
using RankedList = std::vector<RankedItem>;

/// Descending by score, ties by right id ascending. Ids missing from
/// `labels` get label 0.
RankedList rank(const std::map<std::string, double>& scores,
                const std::map<std::string, std::int64_t>& labels = {});
/// Sorts in place with the same order as `rank`.
void sort_ranked(RankedList& items);
std::vector<std::int64_t> ranked_labels(const RankedList& list);

// Relevance for precision, AP and RR is label > 0. NDCG uses graded gains
// 2^label - 1 with a log2(rank + 1) discount.
double precision_at_k(std::span<const std::int64_t> labels, std::size_t k);
double average_precision(std::span<const std::int64_t> labels);
double mean_average_precision(const std::vector<std::vector<std::int64_t>>& queries);
double ndcg_at_k(std::span<const std::int64_t> labels, std::size_t k);
double reciprocal_rank(std::span<const std::int64_t> labels);
double mean_reciprocal_rank(const std::vector<std::vector<std::int64_t>>& queries);

enum class MetricKind { kPrecision, kMap, kNdcg, kMrr };

/// "p@k", "map", "ndcg@k" or "mrr".
struct Metric {
  MetricKind kind = MetricKind::kNdcg;
  std::size_t k = 0;

  static Metric parse(std::string_view name);
  std::string name() const;
  /// Value for a single ranked query.
  double operator()(std::span<const std::int64_t> labels) const;
};

}  // namespace textmatch
