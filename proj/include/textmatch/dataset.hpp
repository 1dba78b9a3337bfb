#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "textmatch/tensor.hpp"
#include "textmatch/text_pipeline.hpp"

namespace textmatch {

/// id -> raw text, ordered by id.
using RawCorpus = std::map<std::string, std::string, std::less<>>;

struct Relation {
  std::string left_id;
  std::string right_id;
  std::int64_t label = 0;
  friend bool operator==(const Relation&, const Relation&) = default;
};

/// Parses "id<TAB>text" lines. `source` names the input in error messages.
RawCorpus parse_corpus(std::string_view content, std::string_view source = "corpus");
RawCorpus load_corpus(const std::filesystem::path& path);
/// Parses "label<TAB>left-id<TAB>right-id" lines; at least one is required.
std::vector<Relation> parse_relations(std::string_view content,
                                      std::string_view source = "relations");
std::vector<Relation> load_relations(const std::filesystem::path& path);

enum class Split { kTrain, kValid, kTest };
std::string_view split_name(Split s);

/// Processed left/right corpora plus the labeled relations between them.
class DataPack {
 public:
  using Corpus = std::map<std::string, Datum, std::less<>>;

  /// Throws IngestionError when a relation id is unknown (all offenders are
  /// listed), a label is negative, or there are no relations.
  DataPack(Corpus left, Corpus right, std::vector<Relation> relations, Split split);

  /// Runs raw corpora through a fitted pipeline.
  static DataPack assemble(const RawCorpus& left, const RawCorpus& right,
                           std::vector<Relation> relations, Split split,
                           const Pipeline& pipeline);

  const Datum& left(std::string_view id) const;
  const Datum& right(std::string_view id) const;
  const Corpus& left_corpus() const { return left_; }
  const Corpus& right_corpus() const { return right_; }
  const std::vector<Relation>& relations() const { return relations_; }
  Split split() const { return split_; }
  /// Distinct left ids in ascending order.
  std::vector<std::string> left_ids() const;

 private:
  Corpus left_;
  Corpus right_;
  std::vector<Relation> relations_;
  Split split_;
};

enum class BatchMode { kPointwise, kPairwise, kListwise };
std::string_view batch_mode_name(BatchMode m);
BatchMode parse_batch_mode(std::string_view name);

struct PairExample {
  std::string left_id;
  std::string positive_id;
  std::string negative_id;
  friend bool operator==(const PairExample&, const PairExample&) = default;
};

struct ListGroup {
  std::string left_id;
  std::vector<std::string> right_ids;
  std::vector<std::int64_t> labels;
  friend bool operator==(const ListGroup&, const ListGroup&) = default;
};

struct Batch {
  BatchMode mode = BatchMode::kPointwise;
  std::vector<Relation> points;
  std::vector<PairExample> pairs;
  std::vector<ListGroup> groups;
  std::size_t size() const;
  friend bool operator==(const Batch&, const Batch&) = default;
};

std::vector<Batch> pointwise_batches(const DataPack& pack, std::size_t batch_size,
                                     std::uint64_t seed);

/// Every (r+, r-) with a shared left id and label(r+) > label(r-), keeping up
/// to `num_neg_per_pos` seeded draws of r- per r+, shuffled and chunked.
/// Throws ConfigError("no trainable pairs") when nothing qualifies.
std::vector<Batch> pairwise_batches(const DataPack& pack, std::size_t num_neg_per_pos,
                                    std::size_t batch_size, std::uint64_t seed);

/// One group per left id holding all its relations in file order. Groups are
/// seeded-shuffled when `shuffle_seed` is given, else in ascending left-id order.
std::vector<Batch> listwise_batches(const DataPack& pack, std::size_t groups_per_batch = 1,
                                    std::optional<std::uint64_t> shuffle_seed = std::nullopt);

/// Reads whitespace-separated "token v1 ... v_dim" lines (optional "count dim"
/// header). Rows of terms missing from the file are uniform in [-0.2, 0.2]
/// under `seed`; row 0 (padding) is zero.
Tensor load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                       std::size_t dimension, std::uint64_t seed);
Tensor parse_embeddings(std::string_view content, const Vocabulary& vocab, std::size_t dimension,
                        std::uint64_t seed);
/// Same initialisation with no pretrained vectors.
Tensor random_embeddings(std::size_t vocab_size, std::size_t dimension, std::uint64_t seed);

/// Smoothed inverse document frequency over the right corpus:
/// idf(t) = ln((N + 1) / (df(t) + 1)) + 1.
class IdfTable {
 public:
  explicit IdfTable(const DataPack& pack);
  IdfTable(std::size_t documents, std::map<std::int64_t, std::size_t> df);

  double operator()(std::int64_t term) const;
  std::size_t documents() const { return documents_; }
  /// idf for indices 0 .. size-1.
  std::vector<double> dense(std::size_t size) const;

 private:
  std::size_t documents_ = 0;
  std::map<std::int64_t, std::size_t> df_;
};

std::map<std::int64_t, double> idf_weights(const DataPack& pack);

}  // namespace textmatch
