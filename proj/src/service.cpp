#include "textmatch/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "textmatch/automl.hpp"
#include "textmatch/dataset.hpp"
#include "textmatch/metrics.hpp"
#include "textmatch/models.hpp"
#include "textmatch/train.hpp"
#include "textmatch/workflow.hpp"

namespace textmatch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kDatasetFields = {"corpus_left", "corpus_right", "relations_train",
                                                 "relations_valid", "relations_test"};

std::string now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string make_id(const char* prefix, std::size_t n) {
  std::ostringstream out;
  out << prefix << std::setw(6) << std::setfill('0') << n;
  return out.str();
}

std::size_t id_number(const std::string& id) {
  const auto dash = id.rfind('-');
  if (dash == std::string::npos) return 0;
  try {
    return std::stoul(id.substr(dash + 1));
  } catch (const std::exception&) {
    return 0;
  }
}

bool is_terminal(const std::string& status) { return status == "done" || status == "failed"; }

ApiError unprocessable(const std::string& message, json detail = nullptr) {
  return ApiError(422, message, std::move(detail));
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& known, const std::string& what) {
  std::vector<std::string> unknown;
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) unknown.push_back(k);
  }
  if (!unknown.empty()) {
    throw unprocessable(what + ": unknown fields", unknown);
  }
}

struct JobState {
  std::string id;
  std::string kind;
  std::string model_id;
  std::string dataset_id;
  json config;
  std::string status = "queued";
  std::string created;
  std::string finished;
  std::string error;
  std::vector<json> history;
  std::optional<json> tune_result;

  json summary() const {
    return {{"id", id},
            {"kind", kind},
            {"model_id", model_id},
            {"dataset_id", dataset_id},
            {"config", config},
            {"status", status},
            {"created", created},
            {"finished", finished.empty() ? json(nullptr) : json(finished)},
            {"error", error.empty() ? json(nullptr) : json(error)},
            {"events", history.size()}};
  }

  json terminal_event() const {
    json e = {{"status", status}};
    if (!error.empty()) e["error"] = error;
    return e;
  }
};

struct LoadedModel {
  std::mutex mutex;
  TrainedModel trained;
};

}  // namespace

struct StudioService::Impl {
  ServiceOptions options;
  fs::path jobs_dir;
  fs::path datasets_dir;

  mutable std::mutex mutex;
  mutable std::condition_variable changed;
  std::map<std::string, std::shared_ptr<JobState>> jobs;
  std::map<std::string, json> datasets;
  std::size_t next_job = 1;
  std::size_t next_dataset = 1;
  std::deque<std::string> queue;
  std::atomic<bool> stopping{false};
  std::vector<std::thread> workers;

  std::mutex models_mutex;
  std::map<std::string, std::shared_ptr<LoadedModel>> models;

  httplib::Server server;
  std::thread server_thread;

  explicit Impl(ServiceOptions o) : options(std::move(o)) {
    if (options.max_concurrent_jobs == 0) throw ConfigError("max_concurrent_jobs must be >= 1");
    jobs_dir = options.store_dir / "jobs";
    datasets_dir = options.store_dir / "datasets";
    fs::create_directories(jobs_dir);
    fs::create_directories(datasets_dir);
    load_store();
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
    for (std::size_t i = 0; i < options.max_concurrent_jobs; ++i) {
      workers.emplace_back([this] { worker_loop(); });
    }
  }

  ~Impl() {
    stopping = true;
    changed.notify_all();
    server.stop();
    if (server_thread.joinable()) server_thread.join();
    for (auto& w : workers) w.join();
    std::lock_guard lock(mutex);
    for (auto& [id, job] : jobs) {
      if (!is_terminal(job->status)) finish(*job, "failed", "interrupted");
    }
  }

  // -- store ---------------------------------------------------------------

  fs::path job_dir(const std::string& id) const { return jobs_dir / id; }

  void persist(const JobState& job) const {
    json j = job.summary();
    j.erase("events");
    write_file_atomic(job_dir(job.id) / "job.json", j.dump(2) + "\n");
  }

  void finish(JobState& job, const std::string& status, const std::string& error) {
    job.status = status;
    job.error = error;
    job.finished = now_iso();
    persist(job);
    changed.notify_all();
  }

  void load_store() {
    for (const auto& entry : fs::directory_iterator(datasets_dir)) {
      const fs::path meta = entry.path() / "dataset.json";
      if (!fs::exists(meta)) continue;
      try {
        json d = json::parse(read_file(meta));
        const auto id = d.at("id").get<std::string>();
        next_dataset = std::max(next_dataset, id_number(id) + 1);
        datasets[id] = std::move(d);
      } catch (const std::exception&) {
        continue;
      }
    }
    for (const auto& entry : fs::directory_iterator(jobs_dir)) {
      const fs::path meta = entry.path() / "job.json";
      if (!fs::exists(meta)) continue;
      auto job = std::make_shared<JobState>();
      try {
        const json j = json::parse(read_file(meta));
        job->id = j.at("id").get<std::string>();
        job->kind = j.at("kind").get<std::string>();
        job->model_id = j.at("model_id").get<std::string>();
        job->dataset_id = j.at("dataset_id").get<std::string>();
        job->config = j.at("config");
        job->status = j.at("status").get<std::string>();
        job->created = j.at("created").get<std::string>();
        if (j.at("finished").is_string()) job->finished = j.at("finished").get<std::string>();
        if (j.at("error").is_string()) job->error = j.at("error").get<std::string>();
        const fs::path history = entry.path() / "history.jsonl";
        if (fs::exists(history)) {
          std::istringstream in(read_file(history));
          for (std::string line; std::getline(in, line);) {
            if (!line.empty()) job->history.push_back(json::parse(line));
          }
        }
        const fs::path tune = entry.path() / "tune.json";
        if (fs::exists(tune)) job->tune_result = json::parse(read_file(tune));
      } catch (const std::exception&) {
        continue;
      }
      next_job = std::max(next_job, id_number(job->id) + 1);
      if (!is_terminal(job->status)) finish(*job, "failed", "interrupted");
      jobs[job->id] = job;
    }
  }

  RawDataset load_raw(const std::string& dataset_id) const {
    json record;
    {
      std::lock_guard lock(mutex);
      record = datasets.at(dataset_id);
    }
    const fs::path dir = datasets_dir / dataset_id;
    const auto& files = record.at("files");
    DatasetFiles df{dir / files.at("corpus_left").get<std::string>(),
                    dir / files.at("corpus_right").get<std::string>(),
                    dir / files.at("relations_train").get<std::string>(), std::nullopt,
                    std::nullopt};
    if (files.contains("relations_valid")) {
      df.relations_valid = dir / files.at("relations_valid").get<std::string>();
    }
    if (files.contains("relations_test")) {
      df.relations_test = dir / files.at("relations_test").get<std::string>();
    }
    return load_dataset(df);
  }

  // -- jobs ----------------------------------------------------------------

  void append_event(JobState& job, json event) {
    {
      std::ofstream out(job_dir(job.id) / "history.jsonl", std::ios::app | std::ios::binary);
      out << event.dump() << "\n";
    }
    std::lock_guard lock(mutex);
    job.history.push_back(std::move(event));
    changed.notify_all();
  }

  void worker_loop() {
    for (;;) {
      std::shared_ptr<JobState> job;
      {
        std::unique_lock lock(mutex);
        changed.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        job = jobs.at(queue.front());
        queue.pop_front();
        job->status = "running";
        persist(*job);
        changed.notify_all();
      }
      run(*job);
    }
  }

  void run(JobState& job) {
    std::string status = "failed";
    std::string error;
    try {
      const RawDataset raw = load_raw(job.dataset_id);
      const json hp = job.config.value("hyper_parameters", json::object());
      const TrainConfig base = TrainConfig::from_json(job.config.value("train", json::object()));
      if (job.kind == "train") {
        auto fit = fit_model(job.model_id, raw, hp, base,
                             [&](const EpochEvent& e) { append_event(job, e.to_json()); }, &stopping);
        if (fit.result.cancelled) {
          error = "interrupted";
        } else if (fit.result.failed) {
          error = fit.result.error;
        } else {
          save_model(job_dir(job.id), fit.trained);
          status = "done";
        }
      } else {
        TuneOptions opts;
        opts.trials = job.config.at("trials").get<std::size_t>();
        opts.seed = job.config.value("seed", std::uint64_t{0});
        opts.metric = job.config.value("metric", std::string("ndcg@10"));
        opts.base_config = base;
        opts.base_hyper_parameters = hp;
        opts.cancel = &stopping;
        const auto space = SearchSpace::from_json(job.config.at("space"));
        auto result = tune(job.model_id, space, raw, opts, [&](const Trial& t) {
          json e = t.to_json();
          e["trial"] = e.at("index");
          e.erase("index");
          append_event(job, std::move(e));
        });
        const json table = result.to_json();
        save_model(job_dir(job.id), result.best);
        write_file_atomic(job_dir(job.id) / "tune.json", table.dump(2) + "\n");
        std::lock_guard lock(mutex);
        job.tune_result = table;
        status = "done";
      }
    } catch (const std::exception& e) {
      error = stopping ? "interrupted" : e.what();
    }
    std::lock_guard lock(mutex);
    finish(job, status, error);
  }

  std::shared_ptr<JobState> find_job(const std::string& id) const {
    auto it = jobs.find(id);
    if (it == jobs.end()) throw ApiError(404, "unknown job '" + id + "'");
    return it->second;
  }

  json validate_config(const std::string& kind, const std::string& model_id, const json& config,
                       const json& dataset) {
    if (!config.is_object()) throw unprocessable("config must be a JSON object");
    const ModelSpec& spec = find_model_spec(model_id);
    std::vector<std::string> keys = {"hyper_parameters", "train"};
    if (kind == "tune") keys.insert(keys.end(), {"space", "trials", "seed", "metric"});
    reject_unknown_keys(config, keys, "config");
    json out = config;
    try {
      spec.resolve(config.value("hyper_parameters", json::object()));
      TrainConfig::from_json(config.value("train", json::object())).validate();
      if (kind == "tune") {
        if (!config.contains("space")) throw ConfigError("tune config needs a search space");
        SearchSpace::from_json(config.at("space")).validate_for(model_id);
        const json& trials = config.value("trials", json(1));
        if (!trials.is_number_unsigned() || trials.get<std::size_t>() < 1) {
          throw ConfigError("trials must be a positive integer");
        }
        out["trials"] = trials;
        if (config.contains("seed") && !config.at("seed").is_number_unsigned()) {
          throw ConfigError("seed must be a non-negative integer");
        }
        out["seed"] = config.value("seed", std::uint64_t{0});
        const auto metric = config.value("metric", std::string("ndcg@10"));
        Metric::parse(metric);
        out["metric"] = metric;
        if (!dataset.at("files").contains("relations_valid")) {
          throw ConfigError("tuning needs a dataset with relations_valid");
        }
      }
    } catch (const ConfigError& e) {
      throw unprocessable(e.what());
    } catch (const json::exception& e) {
      throw unprocessable(std::string("malformed config: ") + e.what());
    }
    return out;
  }

  json create_job(const json& request) {
    if (!request.is_object()) throw unprocessable("request must be a JSON object");
    reject_unknown_keys(request, {"kind", "model_id", "dataset_id", "config"}, "job request");
    const auto kind = request.value("kind", std::string("train"));
    if (kind != "train" && kind != "tune") throw unprocessable("kind must be train or tune");
    if (!request.contains("model_id") || !request.at("model_id").is_string()) {
      throw unprocessable("model_id is required");
    }
    if (!request.contains("dataset_id") || !request.at("dataset_id").is_string()) {
      throw unprocessable("dataset_id is required");
    }
    const auto model_id = request.at("model_id").get<std::string>();
    const auto dataset_id = request.at("dataset_id").get<std::string>();
    try {
      find_model_spec(model_id);
    } catch (const ConfigError&) {
      throw ApiError(404, "unknown model '" + model_id + "'");
    }
    json dataset;
    {
      std::lock_guard lock(mutex);
      auto it = datasets.find(dataset_id);
      if (it == datasets.end()) throw ApiError(404, "unknown dataset '" + dataset_id + "'");
      dataset = it->second;
    }
    const json config = validate_config(kind, model_id, request.value("config", json::object()), dataset);

    std::lock_guard lock(mutex);
    if (stopping) throw ApiError(503, "service is shutting down");
    auto job = std::make_shared<JobState>();
    job->id = make_id("job-", next_job++);
    job->kind = kind;
    job->model_id = model_id;
    job->dataset_id = dataset_id;
    job->config = config;
    job->created = now_iso();
    fs::create_directories(job_dir(job->id));
    write_file_atomic(job_dir(job->id) / "history.jsonl", "");
    persist(*job);
    jobs[job->id] = job;
    queue.push_back(job->id);
    changed.notify_all();
    return job->summary();
  }

  json create_tune(const json& request) {
    if (!request.is_object()) throw unprocessable("request must be a JSON object");
    reject_unknown_keys(request,
                        {"model_id", "dataset_id", "space", "trials", "seed", "metric",
                         "hyper_parameters", "train"},
                        "tune request");
    json config = json::object();
    for (const char* k : {"space", "trials", "seed", "metric", "hyper_parameters", "train"}) {
      if (request.contains(k)) config[k] = request.at(k);
    }
    json job = {{"kind", "tune"}, {"config", config}};
    for (const char* k : {"model_id", "dataset_id"}) {
      if (request.contains(k)) job[k] = request.at(k);
    }
    return create_job(job);
  }

  // -- datasets ------------------------------------------------------------

  json create_dataset(const std::map<std::string, std::string>& files) {
    std::vector<std::string> unknown;
    std::size_t total = 0;
    for (const auto& [name, content] : files) {
      if (std::find(kDatasetFields.begin(), kDatasetFields.end(), name) == kDatasetFields.end()) {
        unknown.push_back(name);
      }
      total += content.size();
    }
    if (!unknown.empty()) throw unprocessable("unknown upload fields", unknown);
    if (total > options.max_upload_bytes) {
      throw ApiError(413, "upload exceeds " + std::to_string(options.max_upload_bytes) + " bytes");
    }
    std::vector<std::string> missing;
    for (const char* f : {"corpus_left", "corpus_right", "relations_train"}) {
      if (!files.count(f)) missing.emplace_back(f);
    }
    if (!missing.empty()) throw unprocessable("missing upload fields", missing);

    RawDataset raw;
    json rows = json::object();
    try {
      raw.left = parse_corpus(files.at("corpus_left"), "corpus_left");
      raw.right = parse_corpus(files.at("corpus_right"), "corpus_right");
      rows["corpus_left"] = raw.left.size();
      rows["corpus_right"] = raw.right.size();
      raw.train = parse_relations(files.at("relations_train"), "relations_train");
      rows["relations_train"] = raw.train.size();
      if (files.count("relations_valid")) {
        raw.valid = parse_relations(files.at("relations_valid"), "relations_valid");
        rows["relations_valid"] = raw.valid.size();
      }
      if (files.count("relations_test")) {
        raw.test = parse_relations(files.at("relations_test"), "relations_test");
        rows["relations_test"] = raw.test.size();
      }
      raw.check_ids();
    } catch (const IngestionError& e) {
      throw unprocessable(e.what());
    }

    std::string id;
    {
      std::lock_guard lock(mutex);
      id = make_id("ds-", next_dataset++);
    }
    const fs::path dir = datasets_dir / id;
    fs::create_directories(dir);
    json names = json::object();
    for (const auto& [name, content] : files) {
      write_file_atomic(dir / (name + ".tsv"), content);
      names[name] = name + ".tsv";
    }
    json record = {{"id", id}, {"files", names}, {"rows", rows}, {"created", now_iso()}};
    write_file_atomic(dir / "dataset.json", record.dump(2) + "\n");
    std::lock_guard lock(mutex);
    datasets[id] = record;
    return record;
  }

  // -- scoring -------------------------------------------------------------

  std::shared_ptr<LoadedModel> model_for(const std::string& id) {
    std::lock_guard lock(models_mutex);
    auto it = models.find(id);
    if (it != models.end()) return it->second;
    auto loaded = std::make_shared<LoadedModel>();
    try {
      loaded->trained = load_model(job_dir(id));
    } catch (const LoadError& e) {
      throw ApiError(500, "cannot load run artifacts", e.what());
    }
    models[id] = loaded;
    return loaded;
  }

  json score(const std::string& id, const json& request) {
    {
      std::lock_guard lock(mutex);
      const auto job = find_job(id);
      if (job->status != "done") {
        throw ApiError(409, "job " + id + " is " + job->status + ", not done");
      }
    }
    if (!request.is_object()) throw unprocessable("request must be a JSON object");
    for (const char* f : {"text_left", "text_right"}) {
      if (!request.contains(f) || !request.at(f).is_string()) {
        throw unprocessable(std::string(f) + " must be a string");
      }
    }
    auto model = model_for(id);
    std::lock_guard lock(model->mutex);
    try {
      const Explanation ex = model->trained.explain_text(request.at("text_left").get<std::string>(),
                                                         request.at("text_right").get<std::string>());
      return {{"score", ex.score}, {"explanation", ex.to_json()}};
    } catch (const ConfigError& e) {
      throw unprocessable(e.what());
    }
  }

  // -- HTTP ----------------------------------------------------------------

  static void send_error(httplib::Response& res, int status, const std::string& message,
                         const json& detail) {
    res.status = status;
    res.set_content(json{{"error", message}, {"detail", detail}}.dump(), "application/json");
  }

  template <typename F>
  static void respond(httplib::Response& res, int ok_status, F&& fn) {
    try {
      json out = fn();
      res.status = ok_status;
      res.set_content(out.dump(), "application/json");
    } catch (const ApiError& e) {
      send_error(res, e.status(), e.what(), e.detail());
    } catch (const json::parse_error& e) {
      send_error(res, 400, "invalid JSON body", e.what());
    } catch (const ConfigError& e) {
      send_error(res, 422, e.what(), nullptr);
    } catch (const IngestionError& e) {
      send_error(res, 422, e.what(), nullptr);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal error", e.what());
    }
  }

  static json body_json(const httplib::Request& req) {
    return req.body.empty() ? json::object() : json::parse(req.body);
  }

  void routes() {
    server.set_payload_max_length(options.max_upload_bytes + 64 * 1024);
    if (options.static_dir && fs::is_directory(*options.static_dir)) {
      server.set_mount_point("/", options.static_dir->string());
    }
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        const char* msg = res.status == 413 ? "upload too large"
                          : res.status == 404 ? "not found"
                                              : "request failed";
        send_error(res, res.status, msg, nullptr);
      }
    });

    server.Get("/api/models", [this](const httplib::Request&, httplib::Response& res) {
      respond(res, 200, [&] { return list_models(); });
    });
    server.Get(R"(/api/models/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      respond(res, 200, [&] { return get_model(req.matches[1]); });
    });
    server.Get("/api/datasets", [this](const httplib::Request&, httplib::Response& res) {
      respond(res, 200, [&] { return list_datasets(); });
    });
    server.Post("/api/datasets", [this](const httplib::Request& req, httplib::Response& res) {
      respond(res, 201, [&] {
        if (!req.is_multipart_form_data()) throw unprocessable("expected multipart/form-data upload");
        std::map<std::string, std::string> files;
        for (const auto& [name, part] : req.files) files[name] = part.content;
        return create_dataset(files);
      });
    });
    server.Get("/api/jobs", [this](const httplib::Request&, httplib::Response& res) {
      respond(res, 200, [&] { return list_jobs(); });
    });
    server.Post("/api/jobs", [this](const httplib::Request& req, httplib::Response& res) {
      respond(res, 202, [&] { return create_job(body_json(req)); });
    });
    server.Post("/api/tune", [this](const httplib::Request& req, httplib::Response& res) {
      respond(res, 202, [&] { return create_tune(body_json(req)); });
    });
    server.Get(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      respond(res, 200, [&] { return get_job(req.matches[1]); });
    });
    server.Post(R"(/api/jobs/([^/]+)/score)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  respond(res, 200, [&] { return score(req.matches[1], body_json(req)); });
                });
    server.Get(R"(/api/jobs/([^/]+)/events)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 {
                   std::lock_guard lock(mutex);
                   if (!jobs.count(id)) {
                     send_error(res, 404, "unknown job '" + id + "'", nullptr);
                     return;
                   }
                 }
                 auto next = std::make_shared<std::size_t>(0);
                 res.set_chunked_content_provider(
                     "application/x-ndjson", [this, id, next](std::size_t, httplib::DataSink& sink) {
                       std::optional<json> terminal;
                       for (const auto& e : wait_events(id, *next, 250, terminal)) {
                         const std::string line = e.dump() + "\n";
                         if (!sink.write(line.data(), line.size())) return false;
                         ++*next;
                       }
                       if (terminal) {
                         const std::string line = terminal->dump() + "\n";
                         sink.write(line.data(), line.size());
                         sink.done();
                       } else if (stopping) {
                         sink.done();
                       }
                       return true;
                     });
               });
  }

  json list_models() const {
    json out = json::array();
    for (const auto& spec : model_registry()) out.push_back(spec.summary_json());
    return out;
  }

  json get_model(const std::string& id) const {
    for (const auto& spec : model_registry()) {
      if (spec.id == id) return spec.to_json();
    }
    throw ApiError(404, "unknown model '" + id + "'");
  }

  json list_datasets() const {
    std::lock_guard lock(mutex);
    json out = json::array();
    for (const auto& [id, d] : datasets) out.push_back(d);
    return out;
  }

  json list_jobs() const {
    std::lock_guard lock(mutex);
    json out = json::array();
    for (const auto& [id, job] : jobs) out.push_back(job->summary());
    return out;
  }

  json get_job(const std::string& id) const {
    std::lock_guard lock(mutex);
    const auto job = find_job(id);
    json j = job->summary();
    j["history"] = job->history;
    if (job->tune_result) j["tune"] = *job->tune_result;
    return j;
  }

  std::vector<json> wait_events(const std::string& id, std::size_t index, int timeout_ms,
                                std::optional<json>& terminal) const {
    std::unique_lock lock(mutex);
    const auto job = find_job(id);
    changed.wait_for(lock, std::chrono::milliseconds(timeout_ms), [&] {
      return job->history.size() > index || is_terminal(job->status) || stopping;
    });
    std::vector<json> out;
    for (std::size_t i = index; i < job->history.size(); ++i) out.push_back(job->history[i]);
    if (is_terminal(job->status)) terminal = job->terminal_event();
    return out;
  }

  json wait_for_job(const std::string& id) const {
    std::unique_lock lock(mutex);
    const auto job = find_job(id);
    changed.wait(lock, [&] { return is_terminal(job->status); });
    return job->summary();
  }
};

StudioService::StudioService(ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

StudioService::~StudioService() = default;

json StudioService::list_models() const { return impl_->list_models(); }
json StudioService::get_model(const std::string& id) const { return impl_->get_model(id); }
json StudioService::create_dataset(const std::map<std::string, std::string>& files) {
  return impl_->create_dataset(files);
}
json StudioService::list_datasets() const { return impl_->list_datasets(); }
json StudioService::create_job(const json& request) { return impl_->create_job(request); }

json StudioService::create_tune(const json& request) { return impl_->create_tune(request); }

json StudioService::list_jobs() const { return impl_->list_jobs(); }
json StudioService::get_job(const std::string& id) const { return impl_->get_job(id); }
json StudioService::score(const std::string& id, const json& request) {
  return impl_->score(id, request);
}

std::vector<json> StudioService::wait_events(const std::string& id, std::size_t index,
                                             int timeout_ms, std::optional<json>& terminal) const {
  return impl_->wait_events(id, index, timeout_ms, terminal);
}

json StudioService::wait_for_job(const std::string& id) const { return impl_->wait_for_job(id); }

bool StudioService::listen(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) return false;
  return impl_->server.listen_after_bind();
}

int StudioService::start_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) throw Error("cannot bind " + host);
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void StudioService::stop() {
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

}  // namespace textmatch
