#include "textmatch/schema.hpp"

#include <algorithm>
#include <cmath>

#include "textmatch/errors.hpp"

namespace textmatch {

std::string_view param_type_name(ParamType t) {
  switch (t) {
    case ParamType::kCategorical: return "categorical";
    case ParamType::kInt: return "int";
    case ParamType::kFloat: return "float";
  }
  return "unknown";
}

std::string HyperParamSpec::check(const nlohmann::json& value) const {
  switch (type) {
    case ParamType::kCategorical:
      if (std::find(choices.begin(), choices.end(), value) == choices.end()) {
        return "must be one of " + nlohmann::json(choices).dump();
      }
      return {};
    case ParamType::kInt: {
      if (!value.is_number_integer()) return "must be an integer";
      const auto v = value.get<double>();
      if (v < low || v > high) {
        return "must lie in [" + std::to_string(static_cast<long long>(low)) + ", " +
               std::to_string(static_cast<long long>(high)) + "]";
      }
      return {};
    }
    case ParamType::kFloat: {
      if (!value.is_number()) return "must be a number";
      const auto v = value.get<double>();
      if (!std::isfinite(v) || v < low || v > high) {
        return "must lie in [" + nlohmann::json(low).dump() + ", " + nlohmann::json(high).dump() + "]";
      }
      return {};
    }
  }
  return "unknown type";
}

nlohmann::json HyperParamSpec::to_json() const {
  nlohmann::json j = {{"name", name},
                      {"type", param_type_name(type)},
                      {"default", default_value},
                      {"description", description}};
  if (type == ParamType::kCategorical) j["choices"] = choices;
  else j["domain"] = {low, high};
  return j;
}

const HyperParamSpec* find_param(const Schema& schema, std::string_view name) {
  for (const auto& p : schema) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

nlohmann::json resolve_params(const Schema& schema, const nlohmann::json& overrides,
                              std::string_view owner) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& p : schema) out[p.name] = p.default_value;
  if (overrides.is_null()) return out;
  if (!overrides.is_object()) {
    throw ConfigError(std::string(owner) + ": hyper-parameters must be a JSON object");
  }
  std::vector<std::string> problems;
  for (const auto& [name, value] : overrides.items()) {
    const HyperParamSpec* p = find_param(schema, name);
    if (p == nullptr) {
      problems.push_back(name + " (unknown)");
      continue;
    }
    if (auto why = p->check(value); !why.empty()) {
      problems.push_back(name + " (" + why + ")");
      continue;
    }
    out[name] = value;
  }
  if (!problems.empty()) {
    std::string msg = std::string(owner) + ": invalid hyper-parameters:";
    for (const auto& pr : problems) msg += " " + pr + ";";
    msg.pop_back();
    throw ConfigError(msg);
  }
  return out;
}

}  // namespace textmatch
