#include "textmatch/automl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "textmatch/errors.hpp"
#include "textmatch/metrics.hpp"

namespace textmatch {

std::string_view domain_kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::kCategorical: return "categorical";
    case DomainKind::kIntUniform: return "int_uniform";
    case DomainKind::kFloatUniform: return "float_uniform";
    case DomainKind::kFloatLogUniform: return "float_log_uniform";
  }
  return "unknown";
}

namespace {

DomainKind parse_domain_kind(const std::string& s, const std::string& name) {
  for (auto k : {DomainKind::kCategorical, DomainKind::kIntUniform, DomainKind::kFloatUniform,
                 DomainKind::kFloatLogUniform}) {
    if (domain_kind_name(k) == s) return k;
  }
  throw ConfigError("search space: " + name + ": unknown domain type '" + s + "'");
}

Domain parse_domain(const std::string& name, const nlohmann::json& j) {
  auto fail = [&](const std::string& why) -> ConfigError {
    return ConfigError("search space: " + name + ": " + why);
  };
  if (!j.is_object()) throw fail("domain must be a JSON object");
  if (!j.contains("type") || !j.at("type").is_string()) throw fail("missing string 'type'");
  Domain d;
  d.kind = parse_domain_kind(j.at("type").get<std::string>(), name);
  if (d.kind == DomainKind::kCategorical) {
    if (!j.contains("values") || !j.at("values").is_array() || j.at("values").empty()) {
      throw fail("categorical domain needs a non-empty 'values' array");
    }
    for (const auto& v : j.at("values")) d.values.push_back(v);
    return d;
  }
  for (const char* key : {"low", "high"}) {
    if (!j.contains(key) || !j.at(key).is_number()) throw fail(std::string("missing numeric '") + key + "'");
  }
  if (d.kind == DomainKind::kIntUniform &&
      (!j.at("low").is_number_integer() || !j.at("high").is_number_integer())) {
    throw fail("int_uniform bounds must be integers");
  }
  d.low = j.at("low").get<double>();
  d.high = j.at("high").get<double>();
  if (!std::isfinite(d.low) || !std::isfinite(d.high)) throw fail("bounds must be finite");
  if (d.kind == DomainKind::kIntUniform ? d.low > d.high : d.low >= d.high) {
    throw fail("low must be below high");
  }
  if (d.kind == DomainKind::kFloatLogUniform && d.low <= 0.0) {
    throw fail("float_log_uniform bounds must be positive");
  }
  return d;
}

}  // namespace

bool Domain::contains(const nlohmann::json& v) const {
  switch (kind) {
    case DomainKind::kCategorical:
      return std::find(values.begin(), values.end(), v) != values.end();
    case DomainKind::kIntUniform:
      return v.is_number_integer() && v.get<double>() >= low && v.get<double>() <= high;
    case DomainKind::kFloatUniform:
    case DomainKind::kFloatLogUniform:
      return v.is_number() && v.get<double>() >= low && v.get<double>() <= high;
  }
  return false;
}

nlohmann::json Domain::to_json() const {
  nlohmann::json j = {{"type", domain_kind_name(kind)}};
  if (kind == DomainKind::kCategorical) {
    j["values"] = values;
  } else if (kind == DomainKind::kIntUniform) {
    j["low"] = static_cast<long long>(low);
    j["high"] = static_cast<long long>(high);
  } else {
    j["low"] = low;
    j["high"] = high;
  }
  return j;
}

SearchSpace SearchSpace::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.empty()) throw ConfigError("search space must be a non-empty JSON object");
  SearchSpace s;
  for (const auto& [name, dom] : j.items()) s.params.emplace(name, parse_domain(name, dom));
  return s;
}

nlohmann::json SearchSpace::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, d] : params) j[name] = d.to_json();
  return j;
}

void SearchSpace::validate_for(std::string_view model_id) const {
  const ModelSpec& spec = find_model_spec(model_id);
  std::vector<std::string> problems;
  for (const auto& [name, d] : params) {
    const HyperParamSpec* p = find_param(spec.schema, name);
    if (p == nullptr) p = find_param(train_config_schema(), name);
    if (p == nullptr) {
      problems.push_back(name + " (unknown)");
      continue;
    }
    std::vector<nlohmann::json> probes;
    if (d.kind == DomainKind::kCategorical) {
      probes = d.values;
    } else if (p->type == ParamType::kCategorical) {
      problems.push_back(name + " (categorical parameter needs a categorical domain)");
      continue;
    } else if (d.kind == DomainKind::kIntUniform) {
      probes = {static_cast<long long>(d.low), static_cast<long long>(d.high)};
    } else if (p->type == ParamType::kInt) {
      problems.push_back(name + " (integer parameter needs an integer domain)");
      continue;
    } else {
      probes = {d.low, d.high};
    }
    for (const auto& v : probes) {
      if (auto why = p->check(v); !why.empty()) {
        problems.push_back(name + " (" + v.dump() + " " + why + ")");
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "search space invalid for " + std::string(model_id) + ":";
    for (const auto& pr : problems) msg += " " + pr + ";";
    msg.pop_back();
    throw ConfigError(msg);
  }
}

nlohmann::json sample(const SearchSpace& space, Rng& rng) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, d] : space.params) {
    switch (d.kind) {
      case DomainKind::kCategorical:
        out[name] = d.values[rng.index(d.values.size())];
        break;
      case DomainKind::kIntUniform: {
        const auto lo = static_cast<long long>(d.low);
        const auto span = static_cast<std::uint64_t>(static_cast<long long>(d.high) - lo) + 1;
        out[name] = lo + static_cast<long long>(rng.index(span));
        break;
      }
      case DomainKind::kFloatUniform:
        out[name] = std::clamp(rng.uniform(d.low, d.high), d.low, d.high);
        break;
      case DomainKind::kFloatLogUniform:
        out[name] =
            std::clamp(std::exp(rng.uniform(std::log(d.low), std::log(d.high))), d.low, d.high);
        break;
    }
  }
  return out;
}

std::string_view trial_status_name(TrialStatus s) {
  switch (s) {
    case TrialStatus::kPending: return "pending";
    case TrialStatus::kDone: return "done";
    case TrialStatus::kFailed: return "failed";
  }
  return "unknown";
}

nlohmann::json Trial::to_json() const {
  nlohmann::json j = {{"index", index},
                      {"config", config},
                      {"status", trial_status_name(status)},
                      {"metric", metric ? nlohmann::json(*metric) : nlohmann::json(nullptr)}};
  if (!error.empty()) j["error"] = error;
  return j;
}

nlohmann::json TuneResult::to_json() const {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& t : trials) table.push_back(t.to_json());
  return {{"metric", metric}, {"trials", table}, {"best_index", best_index}};
}

namespace {

struct TrialOutcome {
  Trial trial;
  std::optional<TrainedModel> model;
};

TrialOutcome run_trial(std::string_view model_id, const ModelSpec& spec, const RawDataset& raw,
                       const TuneOptions& options, std::size_t index, nlohmann::json config) {
  TrialOutcome out;
  out.trial.index = index;
  out.trial.config = config;
  try {
    nlohmann::json hp = options.base_hyper_parameters.is_null() ? nlohmann::json::object()
                                                                : options.base_hyper_parameters;
    nlohmann::json train_params = nlohmann::json::object();
    for (const auto& [name, v] : config.items()) {
      if (find_param(spec.schema, name) != nullptr) hp[name] = v;
      else train_params[name] = v;
    }
    TrainConfig cfg = apply_train_params(options.base_config, train_params);
    cfg.seed = options.seed;
    cfg.validate();
    PreparedData data = prepare_data(model_id, raw, hp, options.seed);
    auto model = build_model(model_id, hp, data.context, options.seed);
    TrainResult result = train(*model, data.train, nullptr, cfg, {}, options.cancel);
    if (result.failed) throw DivergenceError(result.error);
    if (result.cancelled) throw Error("cancelled");
    const double value = evaluate(*model, *data.valid, {options.metric}).at(options.metric);
    if (!std::isfinite(value)) throw DivergenceError("selection metric is not finite");
    out.trial.status = TrialStatus::kDone;
    out.trial.metric = value;
    out.model = TrainedModel(std::move(model), std::move(data.pipeline), cfg);
  } catch (const Error& e) {
    out.trial.status = TrialStatus::kFailed;
    out.trial.error = e.what();
  }
  return out;
}

}  // namespace

TuneResult tune(std::string_view model_id, const SearchSpace& space, const RawDataset& raw,
                const TuneOptions& options, const TrialSink& sink) {
  const ModelSpec& spec = find_model_spec(model_id);
  if (options.trials == 0) throw ConfigError("tuning needs at least one trial");
  if (raw.valid.empty()) throw ConfigError("tuning needs validation relations");
  Metric::parse(options.metric);
  space.validate_for(model_id);
  options.base_config.validate();
  spec.resolve(options.base_hyper_parameters);

  std::vector<nlohmann::json> configs;
  for (std::size_t i = 0; i < options.trials; ++i) {
    Rng rng(derive_seed(options.seed, i));
    configs.push_back(sample(space, rng));
  }

  std::vector<TrialOutcome> outcomes(options.trials);
  std::atomic<std::size_t> next{0};
  std::mutex sink_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < options.trials; i = next++) {
      if (options.cancel != nullptr && options.cancel->load()) return;
      outcomes[i] = run_trial(model_id, spec, raw, options, i, configs[i]);
      if (sink) {
        std::lock_guard lock(sink_mutex);
        sink(outcomes[i].trial);
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, options.trials);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (options.cancel != nullptr && options.cancel->load()) throw Error("tuning cancelled");

  TuneResult result;
  result.metric = options.metric;
  std::optional<std::size_t> best;
  for (auto& o : outcomes) {
    if (o.trial.status == TrialStatus::kDone &&
        (!best || *o.trial.metric > *outcomes[*best].trial.metric)) {
      best = o.trial.index;
    }
    result.trials.push_back(o.trial);
  }
  if (!best) {
    std::string msg = "every tuning trial failed:";
    for (const auto& t : result.trials) msg += " trial " + std::to_string(t.index) + ": " + t.error + ";";
    msg.pop_back();
    throw Error(msg);
  }
  result.best_index = *best;
  result.best = std::move(*outcomes[*best].model);
  return result;
}

}  // namespace textmatch
