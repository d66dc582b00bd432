// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON encodings of the domain types. Readers are strict: unknown keys and
// wrong types raise ConfigError naming the offending path.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "groklab/activation.hpp"
#include "groklab/dataset.hpp"
#include "groklab/error.hpp"
#include "groklab/network.hpp"
#include "groklab/optimizer.hpp"

namespace groklab {

using json = nlohmann::json;

inline constexpr int format_version = 1;

namespace jsonio {

inline void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
}

inline void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
T get(const json& j, std::string_view where, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, std::string_view where, const char* key, T fallback) {
  return j.contains(key) ? get<T>(j, where, key) : fallback;
}

inline void check_version(const json& j, std::string_view where) {
  const int v = get<int>(j, where, "format_version");
  if (v != format_version)
    throw ConfigError(std::string(where) + ": unsupported format_version " + std::to_string(v));
}

}  // namespace jsonio

inline json to_json(const ActivationSpec& a) {
  json j{{"kind", std::string(kind_name(a.kind))}};
  if (a.kind == ActivationKind::polynomial) {
    j["b"] = a.b;
    j["a"] = a.a;
  }
  return j;
}

/// Accepts {"kind": ..., "b": ..., "a": ...} or a shorthand string:
/// "square", "cubic", "abs_cubic", "signed_square".
inline ActivationSpec activation_from_json(const json& j, std::string_view where = "activation") {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "square") return ActivationSpec::square();
    try {
      const auto kind = parse_kind(name);
      if (kind == ActivationKind::polynomial) throw ConfigError(std::string(where) + ": polynomial needs b and a");
      return {kind, 0.0, 0.0};
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string(where) + ": " + e.what());
    }
  }
  jsonio::reject_unknown(j, where, {"kind", "b", "a"});
  ActivationKind kind;
  try {
    kind = parse_kind(jsonio::get<std::string>(j, where, "kind"));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
  if (kind != ActivationKind::polynomial) {
    if (j.contains("a") || j.contains("b"))
      throw ConfigError(std::string(where) + ": coefficients only apply to polynomial");
    return {kind, 0.0, 0.0};
  }
  return {kind, jsonio::get<double>(j, where, "b"), jsonio::get<double>(j, where, "a")};
}

inline json to_json(const ArchSpec& a) {
  return {{"input_dim", a.input_dim}, {"hidden_dims", a.hidden_dims}, {"output_dim", a.output_dim}};
}

inline json to_json(const SymmetryFilter& f) {
  return {{"require_j_ge_i", f.require_j_ge_i},
          {"require_i_gt_j", f.require_i_gt_j},
          {"excluded_differences", std::vector<int>(f.excluded_differences.begin(), f.excluded_differences.end())}};
}

inline SymmetryFilter filter_from_json(const json& j, std::string_view where = "dataset.filter") {
  jsonio::reject_unknown(j, where, {"require_j_ge_i", "require_i_gt_j", "excluded_differences"});
  SymmetryFilter f;
  f.require_j_ge_i = jsonio::get_or<bool>(j, where, "require_j_ge_i", false);
  f.require_i_gt_j = jsonio::get_or<bool>(j, where, "require_i_gt_j", false);
  for (int d : jsonio::get_or<std::vector<int>>(j, where, "excluded_differences", {})) f.excluded_differences.insert(d);
  try {
    f.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return f;
}

inline json to_json(const AdamWConfig& c) {
  return {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}, {"weight_decay", c.weight_decay}};
}

inline AdamWConfig adamw_from_json(const json& j, std::string_view where = "optimizer") {
  jsonio::reject_unknown(j, where, {"lr", "beta1", "beta2", "eps", "weight_decay"});
  AdamWConfig c;
  c.lr = jsonio::get_or(j, where, "lr", c.lr);
  c.beta1 = jsonio::get_or(j, where, "beta1", c.beta1);
  c.beta2 = jsonio::get_or(j, where, "beta2", c.beta2);
  c.eps = jsonio::get_or(j, where, "eps", c.eps);
  c.weight_decay = jsonio::get_or(j, where, "weight_decay", c.weight_decay);
  if (!(c.lr > 0.0) || !(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0) || !(c.eps > 0.0) ||
      !(c.weight_decay >= 0.0))
    throw ConfigError(std::string(where) + ": hyperparameter out of range");
  return c;
}

}  // namespace groklab
