#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "textmatch/automl.hpp"
#include "textmatch/train.hpp"
#include "textmatch/workflow.hpp"

namespace textmatch {

/// Single-document run description shared by the command-line tool:
/// {"model_id": "knrm",
///  "hyper_parameters": {...},
///  "dataset": {"corpus_left": "...", "corpus_right": "...", "relations_train": "...",
///              "relations_valid": "...", "relations_test": "..."},
///  "train": {...TrainConfig...},
///  "embeddings": "vectors.txt",
///  "space": {...}, "trials": 4, "selection_metric": "ndcg@10"}
/// Dataset and embedding paths are relative to the manifest's directory.
struct RunManifest {
  std::string model_id;
  nlohmann::json hyper_parameters = nlohmann::json::object();
  DatasetFiles dataset;
  TrainConfig train;
  std::optional<std::filesystem::path> embeddings;
  std::optional<SearchSpace> space;
  std::size_t trials = 1;
  std::string selection_metric = "ndcg@10";

  /// Validates every section against the model and training schemas;
  /// throws ConfigError before any data is read.
  static RunManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunManifest load(const std::filesystem::path& file);
};

}  // namespace textmatch
