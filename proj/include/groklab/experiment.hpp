// SPDX-License-Identifier: Apache-2.0
#pragma once

// Config-driven training runs and parallel sweeps.
//
// Seeding: a run's root seed feeds derive_seed(root, 1) for the data split
// and derive_seed(root, 2) for initialization unless the config pins them.
// Sweep run i gets root seed derive_seed(sweep_root, i) unless it sets its own.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "groklab/checkpoint.hpp"
#include "groklab/dataset.hpp"
#include "groklab/error.hpp"
#include "groklab/json_io.hpp"
#include "groklab/metrics.hpp"
#include "groklab/network.hpp"
#include "groklab/optimizer.hpp"
#include "groklab/random.hpp"

namespace groklab {

struct RunConfig {
  DatasetSpec dataset;
  bool dataset_seed_pinned = false;
  std::vector<int> hidden_dims{256};
  ActivationSpec activation = ActivationSpec::square();
  std::optional<std::uint64_t> init_seed;
  AdamWConfig optimizer;
  long epochs = 20000;
  long log_every = 10;
  long checkpoint_every = 0;  // 0 disables periodic checkpoints; the final one is always written
  double acc_threshold = 0.99;
  /// Stop once test accuracy has stayed >= acc_threshold for this many
  /// epochs. 0 trains the full budget.
  long stop_after_grok = 0;
  std::uint64_t seed = 0;
  std::string output_dir;

  ArchSpec arch() const { return ArchSpec::for_modulus(dataset.modulus, hidden_dims, activation); }

  std::uint64_t data_seed() const { return dataset_seed_pinned ? dataset.seed : derive_seed(seed, 1); }
  std::uint64_t model_seed() const { return init_seed.value_or(derive_seed(seed, 2)); }

  void validate() const {
    try {
      dataset.validate();
      arch().validate();
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
    if (stop_after_grok < 0) throw ConfigError("stop_after_grok must be >= 0");
    if (!(acc_threshold > 0.0 && acc_threshold <= 1.0)) throw ConfigError("acc_threshold must lie in (0, 1]");
  }
};

inline json to_json(const RunConfig& c) {
  json ds{{"modulus", c.dataset.modulus}, {"train_frac", c.dataset.train_frac}, {"filter", to_json(c.dataset.filter)}};
  if (c.dataset_seed_pinned) ds["seed"] = c.dataset.seed;
  json model{{"hidden_dims", c.hidden_dims}, {"activation", to_json(c.activation)}};
  if (c.init_seed) model["seed"] = *c.init_seed;
  json j{{"format_version", format_version},
         {"seed", c.seed},
         {"dataset", std::move(ds)},
         {"model", std::move(model)},
         {"optimizer", to_json(c.optimizer)},
         {"epochs", c.epochs},
         {"log_every", c.log_every},
         {"checkpoint_every", c.checkpoint_every},
         {"acc_threshold", c.acc_threshold},
         {"stop_after_grok", c.stop_after_grok}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

/// `default_seed` applies when the document has no "seed" key.
inline RunConfig run_config_from_json(const json& j, std::optional<std::uint64_t> default_seed = std::nullopt,
                                      bool require_version = true) {
  constexpr std::string_view where = "config";
  jsonio::reject_unknown(j, where,
                         {"format_version", "seed", "dataset", "model", "optimizer", "epochs", "log_every",
                          "checkpoint_every", "acc_threshold", "stop_after_grok", "output_dir"});
  if (require_version || j.contains("format_version")) jsonio::check_version(j, where);

  RunConfig c;
  if (j.contains("seed"))
    c.seed = jsonio::get<std::uint64_t>(j, where, "seed");
  else if (default_seed)
    c.seed = *default_seed;

  if (!j.contains("dataset")) throw ConfigError("config: missing key 'dataset'");
  const auto& ds = j.at("dataset");
  jsonio::reject_unknown(ds, "config.dataset", {"modulus", "train_frac", "filter", "seed"});
  c.dataset.modulus = jsonio::get<int>(ds, "config.dataset", "modulus");
  c.dataset.train_frac = jsonio::get<double>(ds, "config.dataset", "train_frac");
  if (ds.contains("filter")) c.dataset.filter = filter_from_json(ds.at("filter"));
  if (ds.contains("seed")) {
    c.dataset.seed = jsonio::get<std::uint64_t>(ds, "config.dataset", "seed");
    c.dataset_seed_pinned = true;
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    jsonio::reject_unknown(m, "config.model", {"hidden_dims", "activation", "seed"});
    c.hidden_dims = jsonio::get_or(m, "config.model", "hidden_dims", c.hidden_dims);
    if (m.contains("activation")) c.activation = activation_from_json(m.at("activation"), "config.model.activation");
    if (m.contains("seed")) c.init_seed = jsonio::get<std::uint64_t>(m, "config.model", "seed");
  }
  if (j.contains("optimizer")) c.optimizer = adamw_from_json(j.at("optimizer"), "config.optimizer");
  c.epochs = jsonio::get_or(j, where, "epochs", c.epochs);
  c.log_every = jsonio::get_or(j, where, "log_every", c.log_every);
  c.checkpoint_every = jsonio::get_or(j, where, "checkpoint_every", c.checkpoint_every);
  c.acc_threshold = jsonio::get_or(j, where, "acc_threshold", c.acc_threshold);
  c.stop_after_grok = jsonio::get_or(j, where, "stop_after_grok", c.stop_after_grok);
  c.output_dir = jsonio::get_or<std::string>(j, where, "output_dir", "");
  if (!c.dataset_seed_pinned) c.dataset.seed = c.data_seed();
  c.validate();
  return c;
}

/// FNV-1a over the canonical JSON form of the config (output_dir excluded).
inline std::string config_digest(const RunConfig& c) {
  RunConfig copy = c;
  copy.output_dir.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(copy).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RunSummary {
  std::string digest;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::optional<long> failed_epoch;
  long epochs_run = 0;
  GrokReport grok;
  double final_train_acc = 0.0;
  double final_test_acc = 0.0;
  std::vector<double> final_entropy;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> checkpoints;
};

inline json to_json(const RunSummary& s) {
  auto opt = [](const std::optional<long>& v) { return v ? json(*v) : json(nullptr); };
  json ent = json::array();
  for (double e : s.final_entropy) ent.push_back(std::isfinite(e) ? json(e) : json(nullptr));
  return {{"format_version", format_version},
          {"config_digest", s.digest},
          {"seed", s.seed},
          {"status", s.ok ? "ok" : "failed"},
          {"error", s.error},
          {"failed_epoch", opt(s.failed_epoch)},
          {"epochs_run", s.epochs_run},
          {"grok",
           {{"t_train", opt(s.grok.t_train)},
            {"t_test", opt(s.grok.t_test)},
            {"delay", opt(s.grok.delay())},
            {"max_test_acc", s.grok.max_test_acc}}},
          {"final_train_acc", s.final_train_acc},
          {"final_test_acc", s.final_test_acc},
          {"final_entropy", std::move(ent)},
          {"wall_clock_seconds", s.wall_clock_seconds},
          {"checkpoints", s.checkpoints}};
}

/// Fixed-precision CSV: epoch,train_loss,test_loss,train_acc,test_acc,entropy_layer_1..L
inline std::string trace_to_csv(const TrainingTrace& trace, std::size_t layers) {
  std::ostringstream os;
  os << "epoch,train_loss,test_loss,train_acc,test_acc";
  for (std::size_t l = 1; l <= layers; ++l) os << ",entropy_layer_" << l;
  os << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    os << buf;
  };
  for (const auto& r : trace) {
    os << r.epoch;
    put(r.train_loss);
    put(r.test_loss);
    put(r.train_acc);
    put(r.test_acc);
    for (double e : r.entropy) put(e);
    os << '\n';
  }
  return os.str();
}

inline TrainingTrace trace_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("epoch,train_loss,test_loss,train_acc,test_acc", 0) != 0)
    throw ConfigError("trace: missing or malformed header");
  TrainingTrace trace;
  long last_epoch = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 5) throw ConfigError("trace: short row '" + line + "'");
    TraceRow r;
    try {
      r.epoch = std::stol(cells[0]);
      r.train_loss = std::stod(cells[1]);
      r.test_loss = std::stod(cells[2]);
      r.train_acc = std::stod(cells[3]);
      r.test_acc = std::stod(cells[4]);
      for (std::size_t k = 5; k < cells.size(); ++k) r.entropy.push_back(std::stod(cells[k]));
    } catch (const std::exception&) {
      throw ConfigError("trace: unparsable row '" + line + "'");
    }
    if (r.epoch <= last_epoch) throw ConfigError("trace: epochs must increase strictly");
    last_epoch = r.epoch;
    trace.push_back(std::move(r));
  }
  if (trace.empty()) throw ConfigError("trace: no rows");
  return trace;
}

struct RunResult {
  TrainingTrace trace;
  RunSummary summary;
  ModelState model;
};

namespace detail {

inline std::vector<double> layer_entropies(const ModelState& model) {
  std::vector<double> out;
  for (const auto& w : model.weights) {
    try {
      out.push_back(layer_entropy(w));
    } catch (const DegenerateError&) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace detail

/// Full-batch AdamW training. Logs epoch 0, every log_every epochs and the
/// last epoch; with an output_dir, writes trace.csv, summary.json and
/// checkpoints/ there. Numeric overflow ends the run with ok == false.
inline RunResult run_training(const RunConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  RunResult res;
  auto& summary = res.summary;
  summary.digest = config_digest(config);
  summary.seed = config.seed;

  DatasetSpec ds = config.dataset;
  ds.seed = config.data_seed();
  const auto data = make_dataset(ds);
  const auto train = data.train.pairs();
  const auto test = data.test.pairs();

  const std::filesystem::path out_dir = config.output_dir;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  auto& model = res.model;
  model = init_model(config.arch(), config.model_seed());
  auto opt = OptimizerState::for_model(model, config.optimizer);
  Workspace ws;
  detail::ForwardCache eval_cache;

  auto save = [&](long epoch, const std::string& name) {
    if (out_dir.empty()) return;
    const auto path = out_dir / "checkpoints" / name;
    save_checkpoint({model, config.model_seed(), epoch}, path);
    summary.checkpoints.push_back((std::filesystem::path("checkpoints") / name).string());
  };
  auto log_row = [&](long epoch) {
    TraceRow row;
    row.epoch = epoch;
    const auto tr = evaluate(model, train, data.train.labels, eval_cache);
    const auto te = evaluate(model, test, data.test.labels, eval_cache);
    row.train_loss = tr.loss;
    row.train_acc = tr.accuracy;
    row.test_loss = te.loss;
    row.test_acc = te.accuracy;
    row.entropy = detail::layer_entropies(model);
    res.trace.push_back(std::move(row));
  };

  long epoch = 0;
  long grokked_since = -1;
  try {
    log_row(0);
    for (epoch = 1; epoch <= config.epochs; ++epoch) {
      const auto& g = loss_and_grad(model, train, data.train.labels, ws);
      adamw_step(opt, model, g.grads);
      for (const auto& w : model.weights)
        if (!w.allFinite()) throw NumericOverflow("numeric overflow in weights");

      bool stop = false;
      if (epoch % config.log_every == 0 || epoch == config.epochs) {
        log_row(epoch);
        if (config.stop_after_grok > 0) {
          if (res.trace.back().test_acc >= config.acc_threshold) {
            if (grokked_since < 0) grokked_since = epoch;
            stop = epoch - grokked_since >= config.stop_after_grok;
          } else {
            grokked_since = -1;
          }
        }
      }
      if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
        char name[48];
        std::snprintf(name, sizeof name, "epoch_%08ld.json", epoch);
        save(epoch, name);
      }
      if (stop) {
        if (res.trace.back().epoch != epoch) log_row(epoch);
        break;
      }
    }
    if (epoch > config.epochs) epoch = config.epochs;
    summary.epochs_run = epoch;
    save(epoch, "final.json");
  } catch (const NumericOverflow& e) {
    summary.ok = false;
    summary.error = NumericOverflow(e.what(), epoch).what();
    summary.failed_epoch = epoch;
    summary.epochs_run = epoch;
  }

  if (!res.trace.empty()) {
    summary.grok = detect_grokking(res.trace, config.acc_threshold);
    summary.final_train_acc = res.trace.back().train_acc;
    summary.final_test_acc = res.trace.back().test_acc;
    summary.final_entropy = res.trace.back().entropy;
  }
  summary.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (!out_dir.empty()) {
    detail::write_text(out_dir / "trace.csv", trace_to_csv(res.trace, model.arch.layers()));
    detail::write_text(out_dir / "summary.json", to_json(summary).dump(2) + "\n");
  }
  return res;
}

/// Runs every config exactly once on up to `workers` threads; summaries come
/// back in input order. A run that throws yields a failed summary.
inline std::vector<RunSummary> run_sweep(const std::vector<RunConfig>& configs, int workers,
                                         std::function<void(std::size_t, const RunSummary&)> on_done = {}) {
  if (workers < 1) throw ArgumentError("run_sweep: workers must be >= 1");
  std::vector<RunSummary> results(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        results[i] = run_training(configs[i]).summary;
      } catch (const std::exception& e) {
        results[i].digest = config_digest(configs[i]);
        results[i].seed = configs[i].seed;
        results[i].ok = false;
        results[i].error = e.what();
      }
      if (on_done) {
        std::lock_guard lock(done_mutex);
        on_done(i, results[i]);
      }
    }
  };
  const auto n = static_cast<std::size_t>(workers) < configs.size() ? static_cast<std::size_t>(workers) : configs.size();
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    if (n > 0) worker();
  }
  return results;
}

/// Sweep document:
///   {format_version, seed, base: {run config without format_version},
///    grid: {"dotted.path": [values...]}, repeats: int}
/// or {format_version, seed, runs: [run configs]}. Grid axes expand in key
/// order (last key fastest); each point is repeated `repeats` times.
inline std::vector<RunConfig> sweep_from_json(const json& j, std::optional<std::uint64_t> seed_override = std::nullopt) {
  constexpr std::string_view where = "sweep";
  jsonio::reject_unknown(j, where, {"format_version", "seed", "base", "grid", "repeats", "runs"});
  jsonio::check_version(j, where);
  const std::uint64_t root = seed_override.value_or(jsonio::get_or<std::uint64_t>(j, where, "seed", 0));

  std::vector<json> docs;
  if (j.contains("runs")) {
    if (j.contains("base") || j.contains("grid")) throw ConfigError("sweep: use either runs or base/grid");
    if (!j.at("runs").is_array()) throw ConfigError("sweep.runs: expected an array");
    for (const auto& r : j.at("runs")) docs.push_back(r);
  } else {
    if (!j.contains("base")) throw ConfigError("sweep: missing 'base' or 'runs'");
    std::vector<json> points{j.at("base")};
    if (j.contains("grid")) {
      jsonio::require_object(j.at("grid"), "sweep.grid");
      for (const auto& [path, values] : j.at("grid").items()) {
        if (!values.is_array() || values.empty()) throw ConfigError("sweep.grid." + path + ": expected a nonempty array");
        std::vector<json> next;
        for (const auto& p : points)
          for (const auto& v : values) {
            json copy = p;
            std::string ptr = "/" + path;
            std::replace(ptr.begin(), ptr.end(), '.', '/');
            copy[json::json_pointer(ptr)] = v;
            next.push_back(std::move(copy));
          }
        points = std::move(next);
      }
    }
    const long repeats = jsonio::get_or<long>(j, where, "repeats", 1);
    if (repeats < 1) throw ConfigError("sweep.repeats must be >= 1");
    for (const auto& p : points)
      for (long r = 0; r < repeats; ++r) docs.push_back(p);
  }

  std::vector<RunConfig> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    json doc = docs[i];
    if (seed_override) doc.erase("seed");
    out.push_back(run_config_from_json(doc, derive_seed(root, i), false));
  }
  return out;
}

}  // namespace groklab
