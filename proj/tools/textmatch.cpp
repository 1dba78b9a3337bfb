#include <CLI11.hpp>

#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>

#include "textmatch/automl.hpp"
#include "textmatch/dataset.hpp"
#include "textmatch/errors.hpp"
#include "textmatch/metrics.hpp"
#include "textmatch/run_manifest.hpp"
#include "textmatch/service.hpp"
#include "textmatch/train.hpp"
#include "textmatch/workflow.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace textmatch;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void note(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << "[textmatch] " << msg << "\n";
}

std::string history_lines(const std::vector<EpochEvent>& history) {
  std::string out;
  for (const auto& e : history) out += e.to_json().dump() + "\n";
  return out;
}

int cmd_gen_toy(const Globals& g, const fs::path& out, std::size_t queries, std::size_t docs) {
  ToyOptions opts{queries, docs, g.seed.value_or(ToyOptions{}.seed)};
  note(g, "writing toy data to " + out.string());
  const DatasetFiles files = generate_toy(out, opts);
  json j = {{"corpus_left", files.corpus_left.string()},
            {"corpus_right", files.corpus_right.string()},
            {"relations", (out / "relations.tsv").string()}};
  if (files.relations_valid) {
    j["relations_train"] = files.relations_train.string();
    j["relations_valid"] = files.relations_valid->string();
    j["relations_test"] = files.relations_test->string();
  }
  std::cout << j.dump() << "\n";
  return kOk;
}

int cmd_train(const Globals& g, const fs::path& manifest_path, const fs::path& out) {
  RunManifest m = RunManifest::load(manifest_path);
  if (g.seed) m.train.seed = *g.seed;
  note(g, "loading dataset");
  const RawDataset raw = load_dataset(m.dataset);
  note(g, "training " + m.model_id + " for " + std::to_string(m.train.epochs) + " epochs");
  auto fit = fit_model(m.model_id, raw, m.hyper_parameters, m.train, [](const EpochEvent& e) {
    std::cout << e.to_json().dump() << std::endl;
  }, nullptr, m.embeddings);
  if (fit.result.failed) {
    std::cerr << "training failed: " << fit.result.error << "\n";
    return kRuntimeFailure;
  }
  save_model(out, fit.trained);
  write_file_atomic(out / "history.jsonl", history_lines(fit.result.history));
  note(g, "artifacts written to " + out.string());
  return kOk;
}

int cmd_evaluate(const Globals& g, const fs::path& run, const fs::path& left, const fs::path& right,
                 const fs::path& relations, const std::string& metrics_csv) {
  std::vector<std::string> metrics;
  std::stringstream ss(metrics_csv);
  for (std::string m; std::getline(ss, m, ',');) {
    if (m.empty()) continue;
    Metric::parse(m);
    metrics.push_back(m);
  }
  if (metrics.empty()) throw ConfigError("no metrics given (expected p@k, map, ndcg@k or mrr)");
  note(g, "loading run " + run.string());
  TrainedModel trained = load_model(run);
  const DataPack pack = DataPack::assemble(load_corpus(left), load_corpus(right),
                                           load_relations(relations), Split::kTest, trained.pipeline);
  std::cout << json(evaluate(*trained.model, pack, metrics)).dump() << "\n";
  return kOk;
}

int cmd_tune(const Globals& g, const fs::path& manifest_path, const fs::path& out,
             std::optional<std::size_t> trials) {
  RunManifest m = RunManifest::load(manifest_path);
  if (!m.space) throw ConfigError("manifest: tune needs a search space");
  TuneOptions opts;
  opts.trials = trials.value_or(m.trials);
  opts.seed = g.seed.value_or(m.train.seed);
  opts.metric = m.selection_metric;
  opts.base_config = m.train;
  opts.base_hyper_parameters = m.hyper_parameters;
  note(g, "loading dataset");
  const RawDataset raw = load_dataset(m.dataset);
  TuneResult result = tune(m.model_id, *m.space, raw, opts, [&](const Trial& t) {
    note(g, "trial " + std::to_string(t.index) + ": " + t.to_json().dump());
  });
  save_model(out, result.best);
  write_file_atomic(out / "tune.json", result.to_json().dump(2) + "\n");
  const Trial& best = result.trials[result.best_index];
  std::cout << json{{"best_index", result.best_index},
                    {"config", best.config},
                    {"metric", result.metric},
                    {"value", *best.metric}}
                   .dump()
            << "\n";
  return kOk;
}

int cmd_score(const Globals& g, const fs::path& run, const std::string& left, const std::string& right,
              bool explain) {
  note(g, "loading run " + run.string());
  const TrainedModel trained = load_model(run);
  const Explanation ex = trained.explain_text(left, right);
  json out = {{"score", ex.score}};
  if (explain) out["explanation"] = ex.to_json();
  std::cout << out.dump() << "\n";
  return kOk;
}

int cmd_serve(const Globals& g, const std::string& host, int port, const fs::path& store,
              std::size_t max_jobs, std::size_t max_upload_mb, const std::string& static_dir) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceOptions opts;
  opts.store_dir = store;
  opts.max_concurrent_jobs = max_jobs;
  opts.max_upload_bytes = max_upload_mb * 1024u * 1024u;
  if (!static_dir.empty()) opts.static_dir = static_dir;
  StudioService service(opts);

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    if (sig != 0) note(g, "signal " + std::to_string(sig) + ", shutting down");
    service.stop();
  });
  note(g, "serving on " + host + ":" + std::to_string(port));
  std::cerr << "listening on http://" << host << ":" << port << std::endl;
  const bool ok = service.listen(host, port);
  if (!ok) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    pthread_kill(waiter.native_handle(), SIGTERM);
  }
  waiter.join();
  return ok ? kOk : kRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural text matching: toy data, training, evaluation, tuning, scoring and the studio API"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "seed for generation, initialisation and shuffling");
  app.add_flag("--verbose,-v", g.verbose, "progress on standard error");

  auto* gen = app.add_subcommand("gen-toy", "write a synthetic matching dataset");
  fs::path gen_out;
  std::size_t queries = 50, docs = 20;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--queries,-n", queries, "number of queries")->check(CLI::PositiveNumber);
  gen->add_option("--docs,-m", docs, "documents per query")->check(CLI::PositiveNumber);

  auto* train_cmd = app.add_subcommand("train", "train a model from a manifest");
  fs::path train_manifest, train_out;
  train_cmd->add_option("--manifest", train_manifest, "run manifest (JSON)")->required();
  train_cmd->add_option("--out", train_out, "artifact directory")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a saved run on relations");
  fs::path eval_run, eval_left, eval_right, eval_rel;
  std::string eval_metrics = "ndcg@10,map";
  eval_cmd->add_option("--run", eval_run, "run directory")->required();
  eval_cmd->add_option("--corpus-left", eval_left, "left corpus TSV")->required();
  eval_cmd->add_option("--corpus-right", eval_right, "right corpus TSV")->required();
  eval_cmd->add_option("--relations", eval_rel, "relations TSV")->required();
  eval_cmd->add_option("--metrics", eval_metrics, "comma-separated metric names");

  auto* tune_cmd = app.add_subcommand("tune", "random search over a manifest's space");
  fs::path tune_manifest, tune_out;
  std::optional<std::size_t> tune_trials;
  tune_cmd->add_option("--manifest", tune_manifest, "run manifest with a space")->required();
  tune_cmd->add_option("--out", tune_out, "directory for tune.json and the best run")->required();
  tune_cmd->add_option("--trials", tune_trials, "overrides the manifest's trial count")
      ->check(CLI::PositiveNumber);

  auto* score_cmd = app.add_subcommand("score", "score one text pair with a saved run");
  fs::path score_run;
  std::string left, right;
  bool explain = false;
  score_cmd->add_option("--run", score_run, "run directory")->required();
  score_cmd->add_option("--left", left, "left text")->required();
  score_cmd->add_option("--right", right, "right text")->required();
  score_cmd->add_flag("--explain", explain, "include the model explanation");

  auto* serve_cmd = app.add_subcommand("serve", "run the studio HTTP API");
  std::string host = "127.0.0.1", static_dir;
  int port = 8080;
  fs::path store = "studio_store";
  std::size_t max_jobs = 1, max_upload_mb = 50;
  serve_cmd->add_option("--host", host, "bind address");
  serve_cmd->add_option("--port", port, "bind port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--store", store, "run store directory");
  serve_cmd->add_option("--max-jobs", max_jobs, "concurrent training jobs")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--max-upload-mb", max_upload_mb, "upload size cap")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--static-dir", static_dir, "UI bundle served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*gen) return cmd_gen_toy(g, gen_out, queries, docs);
    if (*train_cmd) return cmd_train(g, train_manifest, train_out);
    if (*eval_cmd) return cmd_evaluate(g, eval_run, eval_left, eval_right, eval_rel, eval_metrics);
    if (*tune_cmd) return cmd_tune(g, tune_manifest, tune_out, tune_trials);
    if (*score_cmd) return cmd_score(g, score_run, left, right, explain);
    if (*serve_cmd) return cmd_serve(g, host, port, store, max_jobs, max_upload_mb, static_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}
