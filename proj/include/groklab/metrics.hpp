// SPDX-License-Identifier: Apache-2.0
#pragma once

// Diagnostics over weights and training traces.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "groklab/error.hpp"

namespace groklab {

struct TraceRow {
  long epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::vector<double> entropy;  // one per layer, first to last

  bool operator==(const TraceRow&) const = default;
};

using TrainingTrace = std::vector<TraceRow>;

struct GrokReport {
  std::optional<long> t_train;
  std::optional<long> t_test;
  double max_test_acc = 0.0;

  std::optional<long> delay() const {
    if (t_train && t_test) return *t_test - *t_train;
    return std::nullopt;
  }
};

enum class EntropyMode {
  /// every connection weight of the layer, flattened
  connections,
  /// one mass per neuron: the L2 norm of its incoming weights (matrix rows)
  neuron_norms,
};

/// Shannon entropy (nats) of |w| normalized to a probability distribution.
inline double layer_entropy(const Eigen::MatrixXd& weights, EntropyMode mode = EntropyMode::connections) {
  Eigen::ArrayXd mass;
  if (mode == EntropyMode::connections)
    mass = weights.reshaped().array().abs();
  else
    mass = weights.rowwise().norm().array();
  const double total = mass.sum();
  if (!(total > 0.0)) throw DegenerateError("degenerate weights: layer has no nonzero entry");
  if (!std::isfinite(total)) throw NumericOverflow("layer_entropy: non-finite weights");
  double s = 0.0;
  for (double m : mass) {
    if (m <= 0.0) continue;
    const double p = m / total;
    s -= p * std::log(p);
  }
  return s;
}

/// Mean-subtracted periodic autocorrelation, normalized so out[0] == 1:
///   corr(k) = sum_l x(l) x((l - k) mod N) / sum_l x(l)^2
inline std::vector<double> circular_autocorrelation(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ArgumentError("circular_autocorrelation: need at least 2 samples");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(x.begin(), x.end());
  for (double& v : c) v -= mean;

  double zero_lag = 0.0;
  for (double v : c) zero_lag += v * v;
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (!(zero_lag > 1e-28 * scale * scale * static_cast<double>(n)))
    throw DegenerateError("constant sequence: autocorrelation undefined");

  std::vector<double> out(n);
  out[0] = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t l = 0; l < n; ++l) acc += c[l] * c[(l + n - k) % n];
    out[k] = acc / zero_lag;
  }
  return out;
}

/// |DFT(x)|^2 in bin order 0..N-1. Direct O(N^2) transform; sequences here
/// are rows or columns of a weight matrix.
inline std::vector<double> dft_power_spectrum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ArgumentError("dft_power_spectrum: need at least 2 samples");
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      // reduce k*l first so the angle stays in [0, 2pi)
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * l) % n) / static_cast<double>(n);
      re += x[l] * std::cos(angle);
      im -= x[l] * std::sin(angle);
    }
    out[k] = re * re + im * im;
  }
  return out;
}

struct PeakReport {
  std::size_t peak_bin = 0;  // folded into [1, N/2]
  double ratio = 0.0;        // capped at peak_ratio_cap
};

inline constexpr double peak_ratio_cap = 1e6;

/// Largest non-DC bin against the mean of the other non-DC bins, its
/// conjugate bin N - k excluded (a real signal always mirrors its peak).
inline PeakReport peak_frequency_ratio(std::span<const double> spectrum, bool exclude_dc = true) {
  const std::size_t n = spectrum.size();
  if (n < 3) throw ArgumentError("peak_frequency_ratio: spectrum needs at least 3 bins");
  const std::size_t first = exclude_dc ? 1 : 0;
  std::size_t peak = first;
  double total = 0.0;
  for (std::size_t k = first; k < n; ++k) {
    total += spectrum[k];
    if (spectrum[k] > spectrum[peak]) peak = k;
  }
  if (!(total > 0.0)) throw DegenerateError("peak_frequency_ratio: spectrum has no power");

  const std::size_t mirror = (n - peak) % n;
  double rest = total - spectrum[peak];
  std::size_t others = n - first - 1;
  if (mirror != peak && mirror >= first) {
    rest -= spectrum[mirror];
    --others;
  }
  PeakReport r;
  r.peak_bin = (peak > n / 2) ? n - peak : peak;
  if (r.peak_bin == 0) r.peak_bin = peak;  // DC peak when exclude_dc is off
  const double mean_rest = others > 0 ? std::max(rest, 0.0) / static_cast<double>(others) : 0.0;
  r.ratio = mean_rest > 0.0 ? std::min(spectrum[peak] / mean_rest, peak_ratio_cap) : peak_ratio_cap;
  return r;
}

/// Fraction of entries with |w| < threshold.
inline double dead_weight_fraction(const Eigen::MatrixXd& weights, double threshold) {
  if (!(threshold > 0.0)) throw ArgumentError("dead_weight_fraction: threshold must be positive");
  if (weights.size() == 0) return 0.0;
  const auto dead = (weights.array().abs() < threshold).count();
  return static_cast<double>(dead) / static_cast<double>(weights.size());
}

/// First logged epochs at which train and test accuracy reach `acc_threshold`.
inline GrokReport detect_grokking(std::span<const TraceRow> trace, double acc_threshold = 0.99) {
  if (trace.empty()) throw ArgumentError("detect_grokking: empty trace");
  if (!(acc_threshold > 0.0 && acc_threshold <= 1.0))
    throw ArgumentError("detect_grokking: threshold must lie in (0, 1]");
  GrokReport r;
  r.max_test_acc = trace.front().test_acc;
  for (const auto& row : trace) {
    if (!r.t_train && row.train_acc >= acc_threshold) r.t_train = row.epoch;
    if (!r.t_test && row.test_acc >= acc_threshold) r.t_test = row.epoch;
    r.max_test_acc = std::max(r.max_test_acc, row.test_acc);
  }
  return r;
}

/// Centered moving average; the window shrinks symmetrically at the ends.
inline std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  if (window == 0 || window % 2 == 0) throw ArgumentError("moving_average: window must be odd");
  const std::size_t n = x.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t reach = std::min({half, i, n - 1 - i});
    double acc = 0.0;
    for (std::size_t k = i - reach; k <= i + reach; ++k) acc += x[k];
    out[i] = acc / static_cast<double>(2 * reach + 1);
  }
  return out;
}

/// Column `c` of a matrix as a plain sequence.
inline std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
  return out;
}

}  // namespace groklab
