// SPDX-License-Identifier: Apache-2.0
#pragma once

// Versioned JSON checkpoints:
//   {format_version, arch, activation: [per hidden layer], seed, epoch,
//    weights: [{rows, cols, data: row-major}]}
// Doubles are written in shortest round-trip form, so save/load is bit-exact.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "groklab/error.hpp"
#include "groklab/json_io.hpp"
#include "groklab/network.hpp"

namespace groklab {

struct Checkpoint {
  ModelState model;
  std::uint64_t seed = 0;
  long epoch = 0;
};

inline json checkpoint_to_json(const Checkpoint& ck) {
  const auto& arch = ck.model.arch;
  json acts = json::array();
  for (const auto& a : arch.activations) acts.push_back(to_json(a));
  json layers = json::array();
  for (const auto& w : ck.model.weights) {
    if (!w.allFinite()) throw NumericOverflow("checkpoint: refusing to save non-finite weights");
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) data.push_back(w(r, c));
    layers.push_back({{"rows", w.rows()}, {"cols", w.cols()}, {"data", std::move(data)}});
  }
  return {{"format_version", format_version},
          {"arch", to_json(arch)},
          {"activation", std::move(acts)},
          {"seed", ck.seed},
          {"epoch", ck.epoch},
          {"weights", std::move(layers)}};
}

inline Checkpoint checkpoint_from_json(const json& j) {
  constexpr std::string_view where = "checkpoint";
  jsonio::reject_unknown(j, where, {"format_version", "arch", "activation", "seed", "epoch", "weights"});
  jsonio::check_version(j, where);

  const auto& ja = j.at("arch");
  jsonio::reject_unknown(ja, "checkpoint.arch", {"input_dim", "hidden_dims", "output_dim"});
  Checkpoint ck;
  auto& arch = ck.model.arch;
  arch.input_dim = jsonio::get<int>(ja, "checkpoint.arch", "input_dim");
  arch.hidden_dims = jsonio::get<std::vector<int>>(ja, "checkpoint.arch", "hidden_dims");
  arch.output_dim = jsonio::get<int>(ja, "checkpoint.arch", "output_dim");
  if (!j.at("activation").is_array()) throw ConfigError("checkpoint.activation: expected an array");
  for (const auto& a : j.at("activation")) arch.activations.push_back(activation_from_json(a, "checkpoint.activation"));
  try {
    arch.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  ck.seed = jsonio::get<std::uint64_t>(j, where, "seed");
  ck.epoch = jsonio::get<long>(j, where, "epoch");

  const auto& jw = j.at("weights");
  if (!jw.is_array() || jw.size() != arch.layers())
    throw ConfigError("checkpoint.weights: expected one entry per layer");
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    const auto& e = jw[l];
    jsonio::reject_unknown(e, "checkpoint.weights[]", {"rows", "cols", "data"});
    const auto rows = jsonio::get<Eigen::Index>(e, "checkpoint.weights[]", "rows");
    const auto cols = jsonio::get<Eigen::Index>(e, "checkpoint.weights[]", "cols");
    if (rows != arch.fan_out(l) || cols != arch.fan_in(l))
      throw ConfigError("checkpoint.weights[" + std::to_string(l) + "]: shape does not match arch");
    const auto data = jsonio::get<std::vector<double>>(e, "checkpoint.weights[]", "data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw ConfigError("checkpoint.weights[" + std::to_string(l) + "]: wrong element count");
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    ck.model.weights.push_back(std::move(w));
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ck).dump() << '\n';
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace groklab
