#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textmatch/dataset.hpp"
#include "textmatch/models.hpp"
#include "textmatch/text_pipeline.hpp"
#include "textmatch/train.hpp"

namespace textmatch {

struct DatasetFiles {
  std::filesystem::path corpus_left;
  std::filesystem::path corpus_right;
  std::filesystem::path relations_train;
  std::optional<std::filesystem::path> relations_valid;
  std::optional<std::filesystem::path> relations_test;
};

/// Unprocessed corpora and relation splits. Empty valid/test means absent.
struct RawDataset {
  RawCorpus left;
  RawCorpus right;
  std::vector<Relation> train;
  std::vector<Relation> valid;
  std::vector<Relation> test;

  /// Throws IngestionError naming every relation id missing from the corpora.
  void check_ids() const;
};

RawDataset load_dataset(const DatasetFiles& files);

/// The raw-text pipeline each model consumes.
Pipeline data_transformer_for(std::string_view model_id);
/// Token length both sides are cut or padded to for index models.
inline constexpr std::int64_t kFixedTextLength = 40;

struct PreparedData {
  Pipeline pipeline;
  DataPack train;
  std::optional<DataPack> valid;
  std::optional<DataPack> test;
  ModelContext context;
};

/// Fits the model's transformer on the texts the training relations use,
/// processes every split and derives the model context: trigram dimension,
/// embeddings (from `embeddings_file` when given, otherwise seeded random)
/// and idf weights.
PreparedData prepare_data(std::string_view model_id, const RawDataset& raw,
                          const nlohmann::json& hyper_parameters, std::uint64_t seed,
                          const std::optional<std::filesystem::path>& embeddings_file = {});

/// A model bundled with the fitted pipeline that feeds it.
struct TrainedModel {
  std::unique_ptr<MatchingModel> model;
  Pipeline pipeline;
  TrainConfig config;

  TrainedModel() = default;
  TrainedModel(std::unique_ptr<MatchingModel> m, Pipeline p, TrainConfig c);
  TrainedModel(const TrainedModel& other);
  TrainedModel& operator=(const TrainedModel& other);
  TrainedModel(TrainedModel&&) noexcept = default;
  TrainedModel& operator=(TrainedModel&&) noexcept = default;

  /// Throws ConfigError for empty or whitespace-only text.
  double score_text(std::string_view left, std::string_view right) const;
  Explanation explain_text(std::string_view left, std::string_view right) const;
};

struct FitResult {
  TrainedModel trained;
  TrainResult result;
};

/// prepare_data, build_model and train, all seeded with `config.seed`. Epoch
/// events carry validation metrics when `raw.valid` is non-empty.
FitResult fit_model(std::string_view model_id, const RawDataset& raw,
                    const nlohmann::json& hyper_parameters, const TrainConfig& config,
                    const EventSink& sink = {}, const std::atomic<bool>* cancel = nullptr,
                    const std::optional<std::filesystem::path>& embeddings_file = {});

/// Writes manifest.json and weights.bin into `dir`. Each file is written to a
/// temporary name and renamed, weights first.
void save_model(const std::filesystem::path& dir, const TrainedModel& trained);
/// Throws LoadError naming the offending file when artifacts are missing,
/// truncated or inconsistent with the manifest.
TrainedModel load_model(const std::filesystem::path& dir);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

struct ToyOptions {
  std::size_t queries = 50;
  std::size_t docs_per_query = 20;
  std::uint64_t seed = 7;
};

/// Synthetic matching data: a document is relevant (label 1) iff it shares
/// at least two distinct words with its query. Writes corpus_left.tsv,
/// corpus_right.tsv, relations.tsv (all pairs) and, when there are at least
/// five queries, relations_{train,valid,test}.tsv split 3:1:1 by query.
DatasetFiles generate_toy(const std::filesystem::path& out_dir, const ToyOptions& options);

}  // namespace textmatch
