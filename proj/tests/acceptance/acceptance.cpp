// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion on stdout, details on
// stderr. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "groklab/groklab.hpp"

namespace {

using namespace groklab;

// ---- pinned settings -------------------------------------------------------

constexpr double acc_threshold = 0.99;

// gradient check
constexpr double grad_step = 1e-5;
constexpr double grad_rel_tol = 1e-4;

// training runs shared by most criteria
constexpr double lr = 1e-2;
constexpr double weight_decay = 0.1;
constexpr double beta2 = 0.999;
constexpr int seeds = 5;

// baseline (P = 53, x^2, frac 0.5)
constexpr long baseline_epochs = 6000;
constexpr long baseline_log_every = 2;

// entropy pattern
constexpr std::size_t entropy_window = 51;
constexpr double entropy_min_change = 5e-3;  // nats

// activation ordering (P = 27, frac 0.8)
constexpr long ordering_epochs = 20000;
constexpr int ordering_seeds = 3;

// odd activations
constexpr long odd_epochs = 10000;
constexpr double odd_decay = 0.05;
constexpr double abs_cubic_hold = 0.02;

// Fourier structure
constexpr double band_fraction = 0.999;
constexpr double trained_peak_ratio = 5.0;

// factoring (P = 20, three layers)
constexpr long factor_epochs = 20000;
constexpr int factor_pairs = 3;

// symmetry-restricted data
constexpr long symmetry_epochs = 10000;
constexpr double half_max_test = 0.92;
constexpr double wide_final_test = 0.95;

// metric examples
constexpr double metric_tol = 1e-9;

// ---- helpers ---------------------------------------------------------------

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void note(const std::string& s) { std::cerr << "    " << s << "\n" << std::flush; }

RunConfig make_config(int p, double frac, std::vector<int> hidden, ActivationSpec act, long epochs, std::uint64_t seed) {
  RunConfig c;
  c.dataset = {p, frac, {}, 0};
  c.hidden_dims = std::move(hidden);
  c.activation = act;
  c.optimizer.lr = lr;
  c.optimizer.weight_decay = weight_decay;
  c.optimizer.beta2 = beta2;
  c.epochs = epochs;
  c.log_every = 10;
  c.acc_threshold = acc_threshold;
  c.seed = seed;
  return c;
}

std::vector<double> last_entropy(const TrainingTrace& t) {
  std::vector<double> s;
  for (const auto& r : t) s.push_back(r.entropy.back());
  return s;
}

double max_test(const TrainingTrace& t) {
  double m = 0.0;
  for (const auto& r : t) m = std::max(m, r.test_acc);
  return m;
}

std::size_t index_of_epoch(const TrainingTrace& t, long epoch) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].epoch >= epoch) return i;
  return t.size() - 1;
}

/// Largest fall x[i] - x[j] with a <= i < j <= b.
double drawdown(const std::vector<double>& x, std::size_t a, std::size_t b) {
  double peak = x[a], best = 0.0;
  for (std::size_t i = a; i <= b; ++i) {
    peak = std::max(peak, x[i]);
    best = std::max(best, peak - x[i]);
  }
  return best;
}

/// Largest rise x[j] - x[i] with a <= i < j <= b.
double runup(const std::vector<double>& x, std::size_t a, std::size_t b) {
  double low = x[a], best = 0.0;
  for (std::size_t i = a; i <= b; ++i) {
    low = std::min(low, x[i]);
    best = std::max(best, x[i] - low);
  }
  return best;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return (saa > 0 && sbb > 0) ? sab / std::sqrt(saa * sbb) : 0.0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---- baseline runs, shared by criteria 3, 6 and 7 --------------------------

std::vector<RunResult>& baseline_runs() {
  static std::vector<RunResult> runs = [] {
    std::vector<RunResult> out;
    for (int s = 0; s < seeds; ++s) {
      auto c = make_config(53, 0.5, {256}, ActivationSpec::square(), baseline_epochs, static_cast<std::uint64_t>(s));
      c.log_every = baseline_log_every;
      out.push_back(run_training(c));
      const auto& g = out.back().summary.grok;
      note(fmt("baseline seed %d: t_train=%ld t_test=%ld final_test=%.4f (%.0f s)", s, g.t_train.value_or(-1),
               g.t_test.value_or(-1), out.back().summary.final_test_acc, out.back().summary.wall_clock_seconds));
    }
    return out;
  }();
  return runs;
}

// ---- criteria --------------------------------------------------------------

Outcome analytic_oracle() {
  int ok = 0, total = 0;
  for (int p : {5, 7, 11, 13}) {
    int ok_p = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = verify_analytic(p, p - 1, seed);
      ++total;
      if (r.all_correct && r.margin > 0.0) ++ok, ++ok_p;
    }
    note(fmt("p=%d N=%d: %d/10 phase seeds classify all %d inputs", p, p - 1, ok_p, p * p));
  }
  return {ok == total, fmt("%d/%d (p, seed) cases all_correct with positive margin", ok, total)};
}

double layer_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale > 0 ? (a - b).norm() / scale : 0.0;
}

Outcome gradient_check() {
  const auto data = make_dataset({5, 0.6, {}, 1});
  const ActivationSpec acts[] = {ActivationSpec::square(), ActivationSpec::poly(1.0, 0.5), ActivationSpec::cubic(),
                                 ActivationSpec::abs_cubic(), ActivationSpec::signed_square()};
  double worst = 0.0;
  int models = 0;
  for (const auto& act : acts)
    for (const std::vector<int>& hidden : {std::vector<int>{6}, std::vector<int>{5, 4}}) {
      auto m = init_model(ArchSpec::for_modulus(5, hidden, act), 40 + static_cast<std::uint64_t>(models));
      for (auto& w : m.weights) w *= 3.0;
      const auto g = loss_and_grad(m, data.train.inputs, data.train.labels).grads;
      for (std::size_t l = 0; l < m.weights.size(); ++l) {
        Eigen::MatrixXd fd(m.weights[l].rows(), m.weights[l].cols());
        for (Eigen::Index i = 0; i < fd.size(); ++i) {
          const double w = m.weights[l](i);
          m.weights[l](i) = w + grad_step;
          const double up = loss_and_grad(m, data.train.inputs, data.train.labels).loss;
          m.weights[l](i) = w - grad_step;
          const double down = loss_and_grad(m, data.train.inputs, data.train.labels).loss;
          m.weights[l](i) = w;
          fd(i) = (up - down) / (2 * grad_step);
        }
        worst = std::max(worst, layer_rel_error(g[l], fd));
      }
      ++models;
    }
  return {worst <= grad_rel_tol, fmt("%d models, worst per-layer relative error %.2e (tol %.0e)", models, worst, grad_rel_tol)};
}

Outcome baseline_grokking() {
  int ok = 0;
  for (const auto& r : baseline_runs()) {
    const auto& g = r.summary.grok;
    const bool pass = g.t_train && g.t_test && *g.delay() > 0 && r.summary.final_test_acc >= acc_threshold;
    ok += pass;
  }
  return {ok >= 4, fmt("%d/%d seeds grok with positive delay and final test acc >= %.2f", ok, seeds, acc_threshold)};
}

Outcome activation_ordering() {
  const std::vector<double> as{0.5, 1.0, 2.0, 5.0};
  std::vector<double> medians;
  auto median_t_test = [](ActivationSpec act, const char* label) {
    std::vector<double> t;
    for (int s = 0; s < ordering_seeds; ++s) {
      auto c = make_config(27, 0.8, {256}, act, ordering_epochs, static_cast<std::uint64_t>(s));
      c.stop_after_grok = c.log_every;
      const auto r = run_training(c);
      t.push_back(r.summary.grok.t_test ? static_cast<double>(*r.summary.grok.t_test)
                                        : static_cast<double>(ordering_epochs + 1));
    }
    const double m = median(t);
    note(fmt("%s: t_test per seed %.0f %.0f %.0f, median %.0f", label, t[0], t[1], t[2], m));
    return m;
  };
  for (double a : as) medians.push_back(median_t_test(ActivationSpec::poly(1.0, a), fmt("x + %gx^2", a).c_str()));
  const double square = median_t_test(ActivationSpec::square(), "x^2");
  const double rho = spearman(as, medians);
  const bool smallest = std::all_of(medians.begin(), medians.end(), [&](double m) { return square < m; });
  return {rho < 0.0 && smallest, fmt("Spearman(a, median t_test) = %.3f, x^2 median %.0f vs min poly %.0f", rho, square,
                                     *std::min_element(medians.begin(), medians.end()))};
}

Outcome odd_activations() {
  struct Tally {
    int never_grok = 0;
    int pattern = 0;
  };
  std::map<std::string, Tally> tally;
  const std::pair<const char*, ActivationSpec> acts[] = {
      {"cubic", ActivationSpec::cubic()}, {"signed_square", ActivationSpec::signed_square()}, {"abs_cubic", ActivationSpec::abs_cubic()}};
  for (const auto& [name, act] : acts)
    for (int s = 0; s < seeds; ++s) {
      const auto r = run_training(make_config(27, 0.8, {256}, act, odd_epochs, static_cast<std::uint64_t>(s)));
      const auto& t = r.trace;
      const double peak = max_test(t);
      std::size_t at = 0;
      while (t[at].test_acc < peak) ++at;
      const double final_acc = t.back().test_acc;
      auto& k = tally[name];
      k.never_grok += peak < acc_threshold;
      if (std::string(name) == "cubic") k.pattern += at + 1 < t.size() && peak - final_acc >= odd_decay;
      if (std::string(name) == "abs_cubic") k.pattern += peak - final_acc <= abs_cubic_hold;
      note(fmt("%s seed %d: max test %.3f at epoch %ld, final %.3f", name, s, peak, t[at].epoch, final_acc));
    }
  const bool pass = tally["cubic"].never_grok == seeds && tally["signed_square"].never_grok == seeds &&
                    tally["cubic"].pattern >= 3 && tally["abs_cubic"].pattern >= 3;
  return {pass, fmt("never reach %.2f: x^3 %d/%d, x^2 sign(x) %d/%d; x^3 peak-then-decay %d/%d; |x^3| holds max %d/%d",
                    acc_threshold, tally["cubic"].never_grok, seeds, tally["signed_square"].never_grok, seeds,
                    tally["cubic"].pattern, seeds, tally["abs_cubic"].pattern, seeds)};
}

Outcome entropy_dynamics() {
  int ok = 0;
  int s = 0;
  for (const auto& r : baseline_runs()) {
    const auto& g = r.summary.grok;
    const auto& t = r.trace;
    const auto sm = moving_average(last_entropy(t), entropy_window);
    bool pass = false;
    if (g.t_train && g.t_test && *g.t_train < *g.t_test) {
      const double peak = max_test(t);
      std::size_t i_max = 0;
      while (t[i_max].test_acc < peak) ++i_max;
      const auto i_train = index_of_epoch(t, *g.t_train), i_test = index_of_epoch(t, *g.t_test);
      const double fall1 = drawdown(sm, 0, i_train);
      const double rise = runup(sm, i_train, i_test);
      const double fall2 = drawdown(sm, i_max, sm.size() - 1);
      pass = fall1 >= entropy_min_change && rise >= entropy_min_change && fall2 >= entropy_min_change;
      note(fmt("seed %d: fall before t_train %.4f, rise t_train..t_test %.4f, fall after max test (epoch %ld) %.4f", s,
               fall1, rise, t[i_max].epoch, fall2));
    } else {
      note(fmt("seed %d: no grokking window", s));
    }
    ok += pass;
    ++s;
  }
  return {ok >= 3, fmt("%d/%d seeds show decrease, increase, decrease (each >= %.0e nats, window %zu)", ok, seeds,
                       entropy_min_change, entropy_window)};
}

Outcome fourier_structure() {
  bool analytic_ok = true;
  int columns = 0;
  for (int p : {5, 7, 11, 13, 53})
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto w = build_analytic_weights(p, 2 * (p - 1), sample_phases(p, 2 * (p - 1), seed));
      for (int c = 0; c < w.width(); ++c) {
        const auto spec = dft_power_spectrum(column(w.second, c));
        const int k = w.frequency[static_cast<std::size_t>(c)];
        const double non_dc = std::accumulate(spec.begin() + 1, spec.end(), 0.0);
        const double band = spec[static_cast<std::size_t>(k)] + (2 * k == p ? 0.0 : spec[static_cast<std::size_t>(p - k)]);
        analytic_ok = analytic_ok && band >= band_fraction * non_dc;
        ++columns;
      }
    }
  int trained_ok = 0;
  for (const auto& r : baseline_runs()) {
    const auto& last = r.model.weights.back();
    double best = 0.0;
    for (Eigen::Index c = 0; c < last.cols(); ++c) {
      try {
        best = std::max(best, peak_frequency_ratio(dft_power_spectrum(column(last, c))).ratio);
      } catch (const DegenerateError&) {
      }
    }
    note(fmt("trained baseline: best column peak ratio %.1f", best));
    trained_ok += best >= trained_peak_ratio;
  }
  return {analytic_ok && trained_ok >= 3,
          fmt("analytic: %s over %d columns; trained: %d/%d seeds with a column ratio >= %.0f",
              analytic_ok ? "all in band" : "band violation", columns, trained_ok, seeds, trained_peak_ratio)};
}

Outcome pca_factoring() {
  int found = 0;
  bool invariant = true;
  for (int s = 0; s < seeds; ++s) {
    const auto r = run_training(
        make_config(20, 0.8, {256, 256}, ActivationSpec::poly(1.0, 0.25), factor_epochs, static_cast<std::uint64_t>(s)));
    const auto scan = scan_factorization(pca(r.model.weights.back()), 20, factor_pairs);
    std::string sizes;
    for (const auto& ps : scan.pairs) {
      sizes += fmt(" pair%d:%zu", ps.pair_index, ps.clusters.size());
      if (ps.factorization) invariant = invariant && ps.factorization->clusters * ps.factorization->cluster_size == 20;
    }
    if (scan.best) ++found;
    note(fmt("seed %d: t_test=%ld, clusters per pair%s, result %s", s, r.summary.grok.t_test.value_or(-1), sizes.c_str(),
             scan.best ? fmt("%dx%d in pair %d", scan.best->clusters, scan.best->cluster_size, scan.best->pair_index).c_str()
                       : "absent"));
  }
  return {found >= 1 && invariant, fmt("%d/%d seeds factor 20; k*m == 20 on every result: %s", found, seeds,
                                       invariant ? "yes" : "NO")};
}

Outcome symmetry_restricted() {
  int half_ok = 0, wide_ok = 0;
  for (int s = 0; s < seeds; ++s) {
    auto c = make_config(53, 0.5, {256}, ActivationSpec::square(), symmetry_epochs, static_cast<std::uint64_t>(s));
    c.dataset.filter.require_j_ge_i = true;
    const auto half = run_training(c);
    c.dataset.train_frac = 0.8;
    const auto wide = run_training(c);
    half_ok += max_test(half.trace) <= half_max_test;
    wide_ok += wide.summary.final_test_acc >= wide_final_test;
    note(fmt("seed %d: frac 0.5 max test %.3f; frac 0.8 final test %.3f", s, max_test(half.trace), wide.summary.final_test_acc));
  }
  return {half_ok >= 4 && wide_ok >= 3, fmt("frac 0.5 max test <= %.2f: %d/%d; frac 0.8 final test >= %.2f: %d/%d",
                                            half_max_test, half_ok, seeds, wide_final_test, wide_ok, seeds)};
}

Outcome metric_examples() {
  int checked = 0, failed = 0;
  auto expect = [&](double got, double want, const char* what) {
    ++checked;
    if (!(std::abs(got - want) <= metric_tol)) {
      ++failed;
      note(fmt("%s: got %.12g want %.12g", what, got, want));
    }
  };
  auto row = [](std::initializer_list<double> v) {
    Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) m(0, i++) = x;
    return m;
  };
  auto cosine = [](int f, int n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) x[static_cast<std::size_t>(l)] = std::cos(2.0 * std::numbers::pi * f * l / n);
    return x;
  };

  expect(layer_entropy(row({1, 1, 1, 1})), std::log(4.0), "entropy uniform");
  expect(layer_entropy(row({0, 0, 5, 0})), 0.0, "entropy single");
  expect(layer_entropy(row({2, 2})), std::log(2.0), "entropy [2,2]");

  const auto a = circular_autocorrelation(std::vector<double>{1, 0, -1, 0});
  const double want_a[] = {1, 0, -1, 0};
  for (int k = 0; k < 4; ++k) expect(a[static_cast<std::size_t>(k)], want_a[k], "autocorr [1,0,-1,0]");
  for (int f : {1, 2}) {
    const auto c = circular_autocorrelation(cosine(f, 8));
    for (int k = 0; k < 8; ++k)
      expect(c[static_cast<std::size_t>(k)], std::cos(2.0 * std::numbers::pi * f * k / 8), "autocorr sampled cosine");
    for (int k = 1; k < 8; ++k) expect(c[static_cast<std::size_t>(k)], c[static_cast<std::size_t>(8 - k)], "autocorr symmetry");
  }

  const auto s = dft_power_spectrum(cosine(3, 12));
  for (std::size_t b = 0; b < 12; ++b) expect(s[b], (b == 3 || b == 9) ? 36.0 : 0.0, "dft cosine");
  const auto dc = dft_power_spectrum(std::vector<double>(6, 1.5));
  for (std::size_t b = 0; b < 6; ++b) expect(dc[b], b == 0 ? 81.0 : 0.0, "dft constant");
  Rng rng(7);
  std::vector<double> x(31);
  for (auto& v : x) v = rng.normal();
  const auto px = dft_power_spectrum(x);
  const double energy = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
  expect(std::accumulate(px.begin(), px.end(), 0.0) / (31 * energy), 1.0, "dft Parseval (relative)");

  expect(dead_weight_fraction(row({1e-50, 0.5}), 1e-41), 0.5, "deadweight half");
  expect(dead_weight_fraction(row({0.3, -2, 7}), 1e-41), 0.0, "deadweight none");
  expect(dead_weight_fraction(row({0.3, -2, 7}), 8.0), 1.0, "deadweight all");

  return {failed == 0, fmt("%d/%d example values within %.0e", checked - failed, checked, metric_tol)};
}

Outcome reproducibility() {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "groklab_acceptance_repro";
  fs::remove_all(root);
  auto cfg = make_config(11, 0.5, {32, 16}, ActivationSpec::poly(1.0, 0.25), 300, 9);
  cfg.checkpoint_every = 100;
  bool identical = true;
  std::vector<fs::path> dirs{root / "a", root / "b"};
  for (const auto& d : dirs) {
    cfg.output_dir = d.string();
    run_training(cfg);
  }
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file() || e.path().filename() == "summary.json") continue;
    const auto rel = fs::relative(e.path(), dirs[0]);
    identical = identical && slurp(e.path()) == slurp(dirs[1] / rel);
    ++files;
  }

  std::vector<RunConfig> sweep;
  for (std::uint64_t i = 0; i < 6; ++i) {
    auto c = make_config(7, 0.6, {24}, i % 2 ? ActivationSpec::cubic() : ActivationSpec::square(), 200, derive_seed(3, i));
    sweep.push_back(c);
  }
  auto strip = [](const std::vector<RunSummary>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) {
      auto j = to_json(s);
      j.erase("wall_clock_seconds");
      out.push_back(j.dump());
    }
    return out;
  };
  const bool sweep_same = strip(run_sweep(sweep, 1)) == strip(run_sweep(sweep, 3));
  fs::remove_all(root);
  return {identical && files >= 5 && sweep_same,
          fmt("%d artifact files byte-identical: %s; sweep workers 1 vs 3 identical: %s", files, identical ? "yes" : "no",
              sweep_same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"groklab acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criterion numbers")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"analytic oracle", analytic_oracle},
      {"gradient correctness", gradient_check},
      {"baseline grokking", baseline_grokking},
      {"activation-delay ordering", activation_ordering},
      {"odd activations", odd_activations},
      {"entropy dynamics", entropy_dynamics},
      {"Fourier structure", fourier_structure},
      {"PCA factoring", pca_factoring},
      {"symmetry-restricted data", symmetry_restricted},
      {"metric unit exactness", metric_examples},
      {"reproducibility", reproducibility},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    std::cerr << "[" << id << "] " << criteria[i].first << "\n" << std::flush;
    const auto started = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[i].first << ": " << o.detail
              << fmt(" [%.1f s]", secs) << "\n"
              << std::flush;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
