#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace textmatch {

enum class ParamType { kCategorical, kInt, kFloat };
std::string_view param_type_name(ParamType t);

/// One tunable knob: its type, domain and default. Int and float domains are
/// the closed range [low, high].
struct HyperParamSpec {
  std::string name;
  ParamType type = ParamType::kFloat;
  std::vector<nlohmann::json> choices;
  double low = 0.0;
  double high = 0.0;
  nlohmann::json default_value;
  std::string description;

  /// Empty when `value` is valid, otherwise the reason it is not.
  std::string check(const nlohmann::json& value) const;
  nlohmann::json to_json() const;
};

using Schema = std::vector<HyperParamSpec>;

const HyperParamSpec* find_param(const Schema& schema, std::string_view name);

/// Defaults overlaid with `overrides`. Throws ConfigError naming every
/// unknown or invalid entry.
nlohmann::json resolve_params(const Schema& schema, const nlohmann::json& overrides,
                              std::string_view owner);

}  // namespace textmatch
