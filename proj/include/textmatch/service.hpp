#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "textmatch/errors.hpp"

namespace textmatch {

/// Failure with an HTTP status. Serialized as {"error": message, "detail": detail}.
class ApiError : public Error {
 public:
  ApiError(int status, const std::string& message, nlohmann::json detail = nullptr)
      : Error(message), status_(status), detail_(std::move(detail)) {}
  int status() const { return status_; }
  const nlohmann::json& detail() const { return detail_; }

 private:
  int status_;
  nlohmann::json detail_;
};

struct ServiceOptions {
  std::filesystem::path store_dir = "studio_store";
  std::size_t max_concurrent_jobs = 1;
  std::size_t max_upload_bytes = 50u * 1024u * 1024u;
  /// Served at "/" when the directory exists.
  std::optional<std::filesystem::path> static_dir;
};

/// Studio backend. Datasets live under <store>/datasets/<id>/ and jobs under
/// <store>/jobs/<id>/ (job.json, history.jsonl, manifest.json, weights.bin and,
/// for tuning jobs, tune.json). Jobs run on a bounded worker pool.
///
/// Every method below throws ApiError; the HTTP layer maps it to a response.
class StudioService {
 public:
  /// Loads the store. Jobs left queued or running by a previous process are
  /// marked failed with message "interrupted".
  explicit StudioService(ServiceOptions options);
  /// Cancels running jobs (they end failed, "interrupted") and joins workers.
  ~StudioService();
  StudioService(const StudioService&) = delete;
  StudioService& operator=(const StudioService&) = delete;

  nlohmann::json list_models() const;
  nlohmann::json get_model(const std::string& id) const;

  /// `files` maps a form field (corpus_left, corpus_right, relations_train,
  /// relations_valid, relations_test) to its content.
  nlohmann::json create_dataset(const std::map<std::string, std::string>& files);
  nlohmann::json list_datasets() const;

  /// {kind, model_id, dataset_id, config}. Train config:
  /// {hyper_parameters, train}; tune config adds {space, trials, seed, metric}.
  /// Returns the queued job summary.
  nlohmann::json create_job(const nlohmann::json& request);
  /// {model_id, dataset_id, space, trials, seed, metric, hyper_parameters, train}.
  nlohmann::json create_tune(const nlohmann::json& request);
  nlohmann::json list_jobs() const;
  /// Summary plus history and, for finished tuning jobs, the trial table.
  nlohmann::json get_job(const std::string& id) const;
  nlohmann::json score(const std::string& id, const nlohmann::json& request);

  /// Blocks until the event at `index` exists, the job is terminal or
  /// `timeout_ms` passes. Returns the events from `index` on; `terminal` is
  /// set to the closing event once the history is exhausted and the job has
  /// finished.
  std::vector<nlohmann::json> wait_events(const std::string& id, std::size_t index, int timeout_ms,
                                          std::optional<nlohmann::json>& terminal) const;

  /// Blocks until the job reaches done or failed; returns its summary.
  nlohmann::json wait_for_job(const std::string& id) const;

  /// Binds and serves until stop(). Returns false when the address is busy.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and serves on a background thread; returns the port.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace textmatch
