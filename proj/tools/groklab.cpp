// SPDX-License-Identifier: Apache-2.0
//
// groklab: train, sweep, analyze, factor, verify-analytic, plot.
//
// Exit codes: 0 success, 1 a run failed, 2 bad input (usage, config,
// checkpoint or trace).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "groklab/groklab.hpp"

namespace fs = std::filesystem;
using namespace groklab;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_run_failed = 1;
constexpr int exit_bad_input = 2;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::optional<std::uint64_t> seed_from_env() {
  const char* env = std::getenv("GROKLAB_SEED");
  if (!env || !*env) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("GROKLAB_SEED is not an unsigned integer: ") + env);
  }
}

json null_if_nan(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---- train -------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = run_config_from_json(read_json_file(a.config));
  if (const auto env = seed_from_env()) {
    cfg.seed = *env;
    if (!cfg.dataset_seed_pinned) cfg.dataset.seed = cfg.data_seed();
  }
  cfg.output_dir = a.out;
  fs::create_directories(a.out);
  write_file(fs::path(a.out) / "config.json", to_json(cfg).dump(2) + "\n");
  const auto res = run_training(cfg);
  std::cout << to_json(res.summary).dump(2) << '\n';
  return res.summary.ok ? exit_ok : exit_run_failed;
}

// ---- sweep -------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string out;
  int workers = 1;
};

int cmd_sweep(const SweepArgs& a) {
  auto configs = sweep_from_json(read_json_file(a.config), seed_from_env());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu", i);
    configs[i].output_dir = (fs::path(a.out) / name).string();
  }
  fs::create_directories(a.out);
  const auto summaries = run_sweep(configs, a.workers, [&](std::size_t i, const RunSummary& s) {
    std::cerr << "run " << i << ": " << (s.ok ? "ok" : "failed") << '\n';
  });
  json all = json::array();
  bool failed = false;
  for (const auto& s : summaries) {
    all.push_back(to_json(s));
    failed = failed || !s.ok;
  }
  const json doc{{"format_version", format_version}, {"runs", all}};
  write_file(fs::path(a.out) / "sweep_summary.json", doc.dump(2) + "\n");
  std::cout << doc.dump(2) << '\n';
  return failed ? exit_run_failed : exit_ok;
}

// ---- analyze -----------------------------------------------------------

struct AnalyzeArgs {
  std::string checkpoint;
  std::string metrics = "entropy";
  double threshold = 1e-41;
  std::string entropy_mode = "connections";
  std::string csv_dir;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_sequence_csv(const fs::path& path, const std::vector<std::vector<double>>& per_column) {
  std::ostringstream os;
  os << "column,index,value\n";
  char buf[64];
  for (std::size_t c = 0; c < per_column.size(); ++c)
    for (std::size_t i = 0; i < per_column[c].size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", c, i, per_column[c][i]);
      os << buf;
    }
  write_file(path, os.str());
}

int cmd_analyze(const AnalyzeArgs& a) {
  const auto metrics = split_list(a.metrics);
  for (const auto& m : metrics)
    if (m != "entropy" && m != "autocorr" && m != "dft" && m != "deadweight") {
      std::cerr << "analyze: unknown metric '" << m << "' (expected entropy, autocorr, dft, deadweight)\n";
      return exit_bad_input;
    }
  if (a.entropy_mode != "connections" && a.entropy_mode != "neuron_norms") {
    std::cerr << "analyze: unknown entropy mode '" << a.entropy_mode << "'\n";
    return exit_bad_input;
  }
  const auto ck = load_checkpoint(a.checkpoint);
  const auto& model = ck.model;
  const auto& last = model.weights.back();

  json report{{"format_version", format_version}, {"checkpoint", a.checkpoint}, {"epoch", ck.epoch}};
  for (const auto& m : metrics) {
    if (m == "entropy") {
      const auto mode = a.entropy_mode == "connections" ? EntropyMode::connections : EntropyMode::neuron_norms;
      json layers = json::array();
      for (const auto& w : model.weights) {
        double s = std::numeric_limits<double>::quiet_NaN();
        try {
          s = layer_entropy(w, mode);
        } catch (const DegenerateError&) {
        }
        layers.push_back({{"entropy", null_if_nan(s)},
                          {"max_entropy", std::log(static_cast<double>(mode == EntropyMode::connections ? w.size() : w.rows()))}});
      }
      report["entropy"] = {{"mode", a.entropy_mode}, {"layers", layers}};
    } else if (m == "deadweight") {
      json layers = json::array();
      for (const auto& w : model.weights) layers.push_back(dead_weight_fraction(w, a.threshold));
      report["deadweight"] = {{"threshold", a.threshold}, {"fraction", layers}};
    } else if (m == "dft") {
      json cols = json::array();
      std::vector<std::vector<double>> spectra;
      std::size_t peaked = 0;
      double best_ratio = 0.0;
      for (Eigen::Index c = 0; c < last.cols(); ++c) {
        const auto spec = dft_power_spectrum(column(last, c));
        spectra.push_back(spec);
        try {
          const auto pk = peak_frequency_ratio(spec, true);
          cols.push_back({{"column", c}, {"peak_bin", pk.peak_bin}, {"ratio", pk.ratio}});
          if (pk.ratio >= 5.0) ++peaked;
          best_ratio = std::max(best_ratio, pk.ratio);
        } catch (const DegenerateError&) {
          cols.push_back({{"column", c}, {"peak_bin", nullptr}, {"ratio", nullptr}});
        }
      }
      report["dft"] = {{"columns", cols}, {"max_ratio", best_ratio}, {"columns_ratio_ge_5", peaked}};
      if (!a.csv_dir.empty()) write_sequence_csv(fs::path(a.csv_dir) / "dft.csv", spectra);
    } else if (m == "autocorr") {
      json cols = json::array();
      std::vector<std::vector<double>> all;
      for (Eigen::Index c = 0; c < last.cols(); ++c) {
        try {
          const auto ac = circular_autocorrelation(column(last, c));
          std::size_t sign_changes = 0;
          for (std::size_t k = 1; k <= ac.size() / 2; ++k)
            if ((ac[k] < 0.0) != (ac[k - 1] < 0.0)) ++sign_changes;
          double min_v = 1.0;
          for (double v : ac) min_v = std::min(min_v, v);
          cols.push_back({{"column", c}, {"lag1", ac[1]}, {"min", min_v}, {"sign_changes_half", sign_changes}});
          all.push_back(ac);
        } catch (const DegenerateError&) {
          cols.push_back({{"column", c}, {"lag1", nullptr}, {"min", nullptr}, {"sign_changes_half", nullptr}});
          all.emplace_back();
        }
      }
      report["autocorr"] = {{"columns", cols}};
      if (!a.csv_dir.empty()) write_sequence_csv(fs::path(a.csv_dir) / "autocorr.csv", all);
    }
  }
  std::cout << report.dump(2) << '\n';
  return exit_ok;
}

// ---- factor ------------------------------------------------------------

struct FactorArgs {
  std::string checkpoint;
  int pairs = 3;
  double link_factor = default_link_factor;
  std::string out = ".";
};

json to_json(const FactorizationResult& f) {
  return {{"k", f.clusters},
          {"m", f.cluster_size},
          {"pair_index", f.pair_index},
          {"residue_modulus", f.residue_modulus ? json(*f.residue_modulus) : json(nullptr)},
          {"circularity", f.circularity}};
}

int cmd_factor(const FactorArgs& a) {
  const auto ck = load_checkpoint(a.checkpoint);
  const auto& last = ck.model.weights.back();
  const int p = static_cast<int>(last.rows());
  const auto result = pca(last);
  const auto scan = scan_factorization(result, p, a.pairs, a.link_factor);

  json pairs = json::array();
  for (const auto& ps : scan.pairs) {
    std::vector<std::size_t> sizes;
    for (const auto& c : ps.clusters) sizes.push_back(c.size());
    pairs.push_back({{"pair_index", ps.pair_index},
                     {"components", {2 * ps.pair_index, 2 * ps.pair_index + 1}},
                     {"circularity", ps.circularity},
                     {"cluster_sizes", sizes},
                     {"clusters", ps.clusters},
                     {"factorization", ps.factorization ? to_json(*ps.factorization) : json(nullptr)}});
  }
  std::vector<double> variance(result.explained_variance.data(),
                               result.explained_variance.data() + std::min<Eigen::Index>(result.count(), 2 * a.pairs));

  fs::create_directories(a.out);
  json svgs = json::array();
  for (const auto& pair : projection_pairs(result, a.pairs)) {
    std::vector<svg::LabeledPoint> pts;
    for (std::size_t q = 0; q < pair.points.size(); ++q)
      pts.push_back({pair.points[q].x, pair.points[q].y, std::to_string(q)});
    const auto name = "pca_pair_" + std::to_string(pair.pair_index) + ".svg";
    const auto c0 = std::to_string(2 * pair.pair_index), c1 = std::to_string(2 * pair.pair_index + 1);
    write_file(fs::path(a.out) / name, svg::scatter("PCA of last-layer rows: PC" + c0 + " vs PC" + c1, "PC" + c0, "PC" + c1, pts));
    svgs.push_back((fs::path(a.out) / name).string());
  }

  const json report{{"format_version", format_version},
                    {"modulus", p},
                    {"explained_variance", variance},
                    {"pairs", pairs},
                    {"result", scan.best ? to_json(*scan.best) : json("absent")},
                    {"svg", svgs}};
  std::cout << report.dump(2) << '\n';
  return exit_ok;
}

// ---- verify-analytic ---------------------------------------------------

struct VerifyArgs {
  int p = 5;
  int n = 4;
  std::uint64_t seed = 0;
  std::string checkpoint_out;
};

int cmd_verify(const VerifyArgs& a) {
  if (a.p < 2 || a.n < 1) {
    std::cerr << "verify-analytic: need --p >= 2 and --n >= 1\n";
    return exit_bad_input;
  }
  const auto weights = build_analytic_weights(a.p, a.n, sample_phases(a.p, a.n, a.seed));
  const auto r = verify_analytic(weights);
  const json report{{"format_version", format_version},
                    {"p", r.modulus},
                    {"n", r.width},
                    {"seed", a.seed},
                    {"all_correct", r.all_correct},
                    {"correct", r.correct},
                    {"total", r.total},
                    {"margin", r.margin},
                    {"max_residual", r.max_residual}};
  if (!a.checkpoint_out.empty()) save_checkpoint({weights.to_model(), a.seed, 0}, a.checkpoint_out);
  std::cout << report.dump(2) << '\n';
  return exit_ok;
}

// ---- plot --------------------------------------------------------------

struct PlotArgs {
  std::string kind;
  std::string input;
  std::string out;
  int pair = 0;
  int column = 0;
};

TrainingTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace " + path);
  return trace_from_csv(in);
}

int cmd_plot(const PlotArgs& a) {
  std::string doc;
  if (a.kind == "accuracy_curves" || a.kind == "entropy_curves") {
    const auto trace = read_trace(a.input);
    std::vector<double> epochs, train, test;
    for (const auto& r : trace) {
      epochs.push_back(static_cast<double>(r.epoch));
      train.push_back(r.train_acc);
      test.push_back(r.test_acc);
    }
    if (a.kind == "accuracy_curves") {
      doc = svg::line_chart("Accuracy", "epoch", "accuracy",
                            {{"train", epochs, train, svg::Stroke::dotted, "#1f77b4"},
                             {"test", epochs, test, svg::Stroke::solid, "#d62728"}});
    } else {
      std::vector<svg::Series> series;
      const char* colors[] = {"#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
      const svg::Stroke strokes[] = {svg::Stroke::dash_dot, svg::Stroke::dashed, svg::Stroke::dotted, svg::Stroke::solid};
      const std::size_t layers = trace.front().entropy.size();
      for (std::size_t l = 0; l < layers; ++l) {
        std::vector<double> ent;
        for (const auto& r : trace) ent.push_back(l < r.entropy.size() ? r.entropy[l] : std::nan(""));
        series.push_back({"entropy layer " + std::to_string(l + 1), epochs, ent, strokes[l % 4], colors[l % 4]});
      }
      series.push_back({"test accuracy", epochs, test, svg::Stroke::solid, "#d62728", true});
      series.push_back({"train accuracy", epochs, train, svg::Stroke::dotted, "#1f77b4", true});
      doc = svg::line_chart("Layer entropy and accuracy", "epoch", "entropy (nats)", series, "accuracy");
    }
  } else if (a.kind == "pca_scatter" || a.kind == "spectrum" || a.kind == "autocorrelation") {
    const auto ck = load_checkpoint(a.input);
    const auto& last = ck.model.weights.back();
    if (a.kind == "pca_scatter") {
      const auto result = pca(last);
      const auto pairs = projection_pairs(result, a.pair + 1);
      std::vector<svg::LabeledPoint> pts;
      const auto& pp = pairs.back();
      for (std::size_t q = 0; q < pp.points.size(); ++q) pts.push_back({pp.points[q].x, pp.points[q].y, std::to_string(q)});
      const auto c0 = std::to_string(2 * a.pair), c1 = std::to_string(2 * a.pair + 1);
      doc = svg::scatter("PCA of last-layer rows: PC" + c0 + " vs PC" + c1, "PC" + c0, "PC" + c1, pts);
    } else {
      if (a.column < 0 || a.column >= last.cols()) {
        std::cerr << "plot: --column out of range [0, " << last.cols() << ")\n";
        return exit_bad_input;
      }
      const auto seq = column(last, a.column);
      if (a.kind == "spectrum")
        doc = svg::stem_plot("Power spectrum, column " + std::to_string(a.column), "frequency bin", "power",
                             dft_power_spectrum(seq));
      else
        doc = svg::stem_plot("Circular autocorrelation, column " + std::to_string(a.column), "lag", "correlation",
                             circular_autocorrelation(seq));
    }
  } else {
    std::cerr << "plot: unknown kind '" << a.kind << "'\n";
    return exit_bad_input;
  }
  write_file(a.out, doc);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"groklab: grokking experiments on modular addition"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train one model from a JSON run config");
  t->add_option("--config", train.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  t->add_option("--out", train.out, "Output directory for trace.csv, summary.json, checkpoints/")->required();

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Run a grid of configs on a worker pool");
  s->add_option("--config", sweep.config, "Sweep config (JSON)")->required()->check(CLI::ExistingFile);
  s->add_option("--out", sweep.out, "Output directory; one run_NNNN/ per config")->required();
  s->add_option("--workers", sweep.workers, "Concurrent runs")->check(CLI::PositiveNumber);

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Weight metrics of a checkpoint");
  an->add_option("--checkpoint", analyze.checkpoint, "Checkpoint (JSON)")->required();
  an->add_option("--metrics", analyze.metrics, "Comma list of entropy,autocorr,dft,deadweight");
  an->add_option("--threshold", analyze.threshold, "Dead-weight magnitude threshold")->check(CLI::PositiveNumber);
  an->add_option("--entropy-mode", analyze.entropy_mode, "connections or neuron_norms");
  an->add_option("--csv-dir", analyze.csv_dir, "Also write per-column sequences as CSV here");

  FactorArgs factor;
  auto* f = app.add_subcommand("factor", "PCA cluster factorization of the last layer");
  f->add_option("--checkpoint", factor.checkpoint, "Checkpoint (JSON)")->required();
  f->add_option("--pairs", factor.pairs, "Number of (even, odd) component pairs to scan")->check(CLI::NonNegativeNumber);
  f->add_option("--link-factor", factor.link_factor, "Single-linkage cut as a multiple of the median nearest-neighbour distance")
      ->check(CLI::PositiveNumber);
  f->add_option("--out", factor.out, "Directory for the per-pair SVG scatters");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify-analytic", "Check the closed-form cosine weights exhaustively");
  v->add_option("--p", verify.p, "Modulus")->required();
  v->add_option("--n", verify.n, "Hidden width")->required();
  v->add_option("--seed", verify.seed, "Phase seed")->required();
  v->add_option("--checkpoint-out", verify.checkpoint_out, "Also save the weights as a checkpoint");

  PlotArgs plot;
  auto* pl = app.add_subcommand("plot", "Render an SVG figure");
  pl->add_option("--kind", plot.kind, "accuracy_curves, entropy_curves, pca_scatter, spectrum, autocorrelation")
      ->required()
      ->check(CLI::IsMember({"accuracy_curves", "entropy_curves", "pca_scatter", "spectrum", "autocorrelation"}));
  pl->add_option("--input", plot.input, "trace.csv for curves, checkpoint for the rest")->required();
  pl->add_option("--out", plot.out, "Output SVG path")->required();
  pl->add_option("--pair", plot.pair, "Projection pair for pca_scatter")->check(CLI::NonNegativeNumber);
  pl->add_option("--column", plot.column, "Last-layer column for spectrum/autocorrelation")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_bad_input;
  }

  try {
    if (*t) return cmd_train(train);
    if (*s) return cmd_sweep(sweep);
    if (*an) return cmd_analyze(analyze);
    if (*f) return cmd_factor(factor);
    if (*v) return cmd_verify(verify);
    if (*pl) return cmd_plot(plot);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_bad_input;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_bad_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_run_failed;
  }
  return exit_bad_input;
}
