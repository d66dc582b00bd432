// SPDX-License-Identifier: Apache-2.0
#pragma once

// Closed-form cosine weights for modular addition with a squaring
// activation, and an exhaustive check of what they actually classify.
//
//   W1[k, n1]     = cos(2 pi k n1 / p + phi1_k)
//   W1[k, p + n2] = cos(2 pi k n2 / p + phi2_k)
//   W2[q, k]      = cos(-2 pi k q / p - phi3_k),   phi3_k = phi1_k + phi2_k
//
// Summing over k, the cross term of (W1 x)^2 peaks coherently at
// q = (n + m) mod p with height ~N/2. The remaining terms of the square carry
// phases that are not locked, so whether they stay below that peak depends
// on N and the draw; verify_analytic() measures it on the exact pipeline.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "groklab/activation.hpp"
#include "groklab/error.hpp"
#include "groklab/network.hpp"
#include "groklab/random.hpp"

namespace groklab {

/// Per-row phases; third[k] == first[k] + second[k] for a consistent set.
struct PhaseAssignment {
  std::vector<double> first;
  std::vector<double> second;
  std::vector<double> third;

  std::size_t size() const { return first.size(); }

  static PhaseAssignment zeros(std::size_t n) { return {std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)}; }

  bool consistent(double tol = 1e-12) const {
    for (std::size_t k = 0; k < size(); ++k)
      if (std::abs(third[k] - (first[k] + second[k])) > tol) return false;
    return true;
  }
};

/// first/second uniform in [0, 2pi); third forced to their sum.
inline PhaseAssignment sample_phases(int p, int n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("sample_phases: need at least one row");
  if (p < 2) throw ArgumentError("sample_phases: modulus must be >= 2");
  Rng rng(seed);
  PhaseAssignment ph;
  for (int k = 0; k < n; ++k) {
    ph.first.push_back(2.0 * std::numbers::pi * rng.uniform());
    ph.second.push_back(2.0 * std::numbers::pi * rng.uniform());
    ph.third.push_back(ph.first.back() + ph.second.back());
  }
  return ph;
}

/// Rows cycle through k = 1 .. p-1, repeating when n > p - 1.
inline std::vector<int> default_frequency_plan(int p, int n) {
  std::vector<int> plan(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) plan[static_cast<std::size_t>(r)] = r % (p - 1) + 1;
  return plan;
}

struct AnalyticWeights {
  int modulus = 0;
  Eigen::MatrixXd first;   // N x 2p
  Eigen::MatrixXd second;  // p x N
  std::vector<int> frequency;

  int width() const { return static_cast<int>(first.rows()); }

  /// Two-layer square-activation model carrying these weights.
  ModelState to_model() const {
    return {ArchSpec::for_modulus(modulus, {width()}, ActivationSpec::square()), {first, second}};
  }
};

inline AnalyticWeights build_analytic_weights(int p, int n, const PhaseAssignment& phases,
                                              const std::vector<int>& frequency_plan) {
  if (n < 1) throw ArgumentError("build_analytic_weights: need at least one row");
  if (p < 2) throw ArgumentError("build_analytic_weights: modulus must be >= 2");
  if (phases.size() != static_cast<std::size_t>(n) || frequency_plan.size() != static_cast<std::size_t>(n))
    throw ArgumentError("build_analytic_weights: phases and frequency plan need one entry per row");
  for (int k : frequency_plan)
    if (k < 1 || k >= p) throw ArgumentError("build_analytic_weights: frequency outside [1, p)");

  AnalyticWeights w{p, Eigen::MatrixXd(n, 2 * p), Eigen::MatrixXd(p, n), frequency_plan};
  const double two_pi_over_p = 2.0 * std::numbers::pi / p;
  for (int r = 0; r < n; ++r) {
    const auto k = static_cast<double>(frequency_plan[static_cast<std::size_t>(r)]);
    const auto idx = static_cast<std::size_t>(r);
    for (int v = 0; v < p; ++v) {
      w.first(r, v) = std::cos(two_pi_over_p * k * v + phases.first[idx]);
      w.first(r, p + v) = std::cos(two_pi_over_p * k * v + phases.second[idx]);
      w.second(v, r) = std::cos(-two_pi_over_p * k * v - phases.third[idx]);
    }
  }
  return w;
}

inline AnalyticWeights build_analytic_weights(int p, int n, const PhaseAssignment& phases) {
  return build_analytic_weights(p, n, phases, default_frequency_plan(p, n));
}

/// Unnormalized first-layer output h_k(n, m) = W1 x for operands (n, m).
inline Eigen::VectorXd analytic_hidden(const AnalyticWeights& w, int n, int m) {
  if (n < 0 || m < 0 || n >= w.modulus || m >= w.modulus)
    throw ArgumentError("analytic_hidden: operands must lie in [0, p)");
  return w.first.col(n) + w.first.col(w.modulus + m);
}

/// Unnormalized output W2 (W1 x)^2 for operands (n, m), one entry per class q.
inline Eigen::VectorXd analytic_output(const AnalyticWeights& w, int n, int m) {
  return w.second * analytic_hidden(w, n, m).array().square().matrix();
}

/// The idealized constructive term: 1/2 sum_k cos(2 pi k (n + m - q) / p).
inline Eigen::VectorXd constructive_term(const AnalyticWeights& w, int n, int m) {
  const int p = w.modulus;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
  for (int q = 0; q < p; ++q)
    for (int k : w.frequency) {
      const long long shift = (static_cast<long long>(k) * (n + m - q)) % p;
      out(q) += 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(shift) / p);
    }
  return out;
}

struct AnalyticReport {
  int modulus = 0;
  int width = 0;
  bool all_correct = false;
  std::size_t correct = 0;  // inputs classified as (n + m) mod p
  std::size_t total = 0;
  double margin = 0.0;      // min over inputs of target output minus best other output
  double max_residual = 0.0;  // max |exact output - constructive term| over inputs and classes
};

/// Exhaustive classification check over all p^2 operand pairs.
inline AnalyticReport verify_analytic(const AnalyticWeights& w) {
  const int p = w.modulus;
  AnalyticReport r{p, w.width(), true, 0, static_cast<std::size_t>(p) * p,
                   std::numeric_limits<double>::infinity(), 0.0};
  for (int n = 0; n < p; ++n)
    for (int m = 0; m < p; ++m) {
      const Eigen::VectorXd out = analytic_output(w, n, m);
      const int target = (n + m) % p;
      double best_other = -std::numeric_limits<double>::infinity();
      for (int q = 0; q < p; ++q)
        if (q != target) best_other = std::max(best_other, out(q));
      const double gap = out(target) - best_other;
      r.margin = std::min(r.margin, gap);
      // argmax with ties to the lowest index, as in accuracy()
      Eigen::Index top = 0;
      out.maxCoeff(&top);
      if (top == target) ++r.correct;
      r.max_residual = std::max(r.max_residual, (out - constructive_term(w, n, m)).cwiseAbs().maxCoeff());
    }
  r.all_correct = r.correct == r.total;
  return r;
}

inline AnalyticReport verify_analytic(int p, int n, std::uint64_t seed) {
  return verify_analytic(build_analytic_weights(p, n, sample_phases(p, n, seed)));
}

}  // namespace groklab
