// SPDX-License-Identifier: Apache-2.0
#pragma once

// Bias-free MLP for modular addition.
//
//   two layers:   logits = W2 phi(W1 x) / (D N)
//   three layers: logits = W3 phi2(W2 phi1(W1 x) / sqrt(N1)) / (D N2)
//
// Weight matrices are stored fan_out x fan_in. Samples travel through the
// network as columns; public entry points take and return samples as rows.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "groklab/activation.hpp"
#include "groklab/error.hpp"
#include "groklab/random.hpp"

namespace groklab {

struct ArchSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int output_dim = 0;
  std::vector<ActivationSpec> activations;  // one per hidden layer

  /// D = 2P inputs, P outputs, the same activation on every hidden layer.
  static ArchSpec for_modulus(int p, std::vector<int> hidden, ActivationSpec act) {
    ArchSpec arch{2 * p, std::move(hidden), p, {}};
    arch.activations.assign(arch.hidden_dims.size(), act);
    return arch;
  }

  std::size_t layers() const { return hidden_dims.size() + 1; }

  int fan_in(std::size_t layer) const { return layer == 0 ? input_dim : hidden_dims[layer - 1]; }
  int fan_out(std::size_t layer) const { return layer == hidden_dims.size() ? output_dim : hidden_dims[layer]; }

  void validate() const {
    if (hidden_dims.empty()) throw ArgumentError("arch: at least one hidden layer required");
    if (activations.size() != hidden_dims.size())
      throw ArgumentError("arch: one activation per hidden layer required");
    if (input_dim < 1 || output_dim < 1) throw ArgumentError("arch: dimensions must be positive");
    for (int h : hidden_dims)
      if (h < 1) throw ArgumentError("arch: hidden widths must be positive");
  }

  bool operator==(const ArchSpec&) const = default;
};

struct ModelState {
  ArchSpec arch;
  std::vector<Eigen::MatrixXd> weights;

  double output_scale() const { return 1.0 / (static_cast<double>(arch.input_dim) * arch.hidden_dims.back()); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
    return n;
  }
};

/// I.i.d. standard normal entries, drawn layer by layer in row-major order.
inline ModelState init_model(const ArchSpec& arch, std::uint64_t seed) {
  arch.validate();
  ModelState model{arch, {}};
  Rng rng(seed);
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    Eigen::MatrixXd w(arch.fan_out(l), arch.fan_in(l));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.normal();
    model.weights.push_back(std::move(w));
  }
  return model;
}

/// Compact view of a one-hot pair batch: row r has ones at columns
/// pairs[r].first and modulus + pairs[r].second. Behaves like the dense
/// 2P-column input for every network entry point.
struct OneHotPairs {
  int modulus = 0;
  std::vector<std::pair<int, int>> pairs;

  Eigen::Index rows() const { return static_cast<Eigen::Index>(pairs.size()); }
  Eigen::Index cols() const { return 2 * modulus; }
};

namespace detail {

/// First-layer pre-activations W * x for every sample (fan_out x n).
template <class Input>
void first_layer(const Eigen::MatrixXd& w, const Input& inputs, Eigen::MatrixXd& z) {
  z.resize(w.rows(), inputs.rows());
  z.noalias() = (inputs * w.transpose()).transpose();
}

inline void first_layer(const Eigen::MatrixXd& w, const OneHotPairs& inputs, Eigen::MatrixXd& z) {
  z.resize(w.rows(), inputs.rows());
  for (Eigen::Index c = 0; c < inputs.rows(); ++c) {
    const auto [i, j] = inputs.pairs[static_cast<std::size_t>(c)];
    z.col(c) = w.col(i) + w.col(inputs.modulus + j);
  }
}

/// Gradient of the first-layer weights given dL/dz (fan_out x n).
template <class Input>
void first_layer_grad(const Eigen::MatrixXd& dz, const Input& inputs, Eigen::MatrixXd& g) {
  g.resize(dz.rows(), inputs.cols());
  g.noalias() = (inputs.transpose() * dz.transpose()).transpose();
}

inline void first_layer_grad(const Eigen::MatrixXd& dz, const OneHotPairs& inputs, Eigen::MatrixXd& g) {
  g.setZero(dz.rows(), inputs.cols());
  for (Eigen::Index c = 0; c < inputs.rows(); ++c) {
    const auto [i, j] = inputs.pairs[static_cast<std::size_t>(c)];
    g.col(i) += dz.col(c);
    g.col(inputs.modulus + j) += dz.col(c);
  }
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;     // pre-activations per hidden layer (N_l x n)
  std::vector<Eigen::MatrixXd> hidden;  // activations per hidden layer (N_l x n)
  Eigen::MatrixXd logits;               // P x n
};

inline void check_finite(const Eigen::MatrixXd& m, const char* where) {
  if (!m.allFinite()) throw NumericOverflow(std::string("numeric overflow in ") + where);
}

/// `inputs` holds samples as rows (dense, sparse or OneHotPairs). Buffers
/// in `cache` are reused across calls with the same shapes.
template <class Input>
void run_forward(const ModelState& model, const Input& inputs, ForwardCache& cache) {
  const auto& arch = model.arch;
  if (inputs.cols() != arch.input_dim)
    throw ArgumentError("forward: input has " + std::to_string(inputs.cols()) + " columns, expected " +
                        std::to_string(arch.input_dim));
  const std::size_t n_hidden = arch.hidden_dims.size();
  cache.pre.resize(n_hidden);
  cache.hidden.resize(n_hidden);
  for (std::size_t l = 0; l < n_hidden; ++l) {
    auto& z = cache.pre[l];
    if (l == 0) {
      first_layer(model.weights[0], inputs, z);
    } else {
      z.resize(arch.fan_out(l), inputs.rows());
      z.noalias() = model.weights[l] * cache.hidden[l - 1];
      z *= 1.0 / std::sqrt(static_cast<double>(arch.fan_in(l)));
    }
    arch.activations[l].apply_into(z, cache.hidden[l]);
    check_finite(cache.hidden[l], "hidden activation");
  }
  cache.logits.resize(arch.output_dim, inputs.rows());
  cache.logits.noalias() = model.weights.back() * cache.hidden.back();
  cache.logits *= model.output_scale();
  check_finite(cache.logits, "logits");
}

template <class Input>
ForwardCache run_forward(const ModelState& model, const Input& inputs) {
  ForwardCache cache;
  run_forward(model, inputs, cache);
  return cache;
}

/// Argmax per column, ties to the lowest class index.
inline int column_argmax(const Eigen::MatrixXd& logits, Eigen::Index col) {
  int best = 0;
  for (Eigen::Index q = 1; q < logits.rows(); ++q)
    if (logits(q, col) > logits(best, col)) best = static_cast<int>(q);
  return best;
}

inline double count_correct(const Eigen::MatrixXd& logits, std::span<const int> labels) {
  std::size_t hits = 0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c)
    if (column_argmax(logits, c) == labels[static_cast<std::size_t>(c)]) ++hits;
  return static_cast<double>(hits);
}

inline void check_labels(std::span<const int> labels, Eigen::Index samples, int classes) {
  if (static_cast<Eigen::Index>(labels.size()) != samples)
    throw ArgumentError("label count does not match sample count");
  for (int y : labels)
    if (y < 0 || y >= classes) throw ArgumentError("label out of range: " + std::to_string(y));
}

}  // namespace detail

/// Logits with samples as rows.
template <class Input>
Eigen::MatrixXd forward(const ModelState& model, const Input& inputs) {
  return detail::run_forward(model, inputs).logits.transpose();
}

struct LossAndGrad {
  double loss = 0.0;
  double accuracy = 0.0;  // batch accuracy, free from the same pass
  std::vector<Eigen::MatrixXd> grads;
};

/// Scratch buffers for repeated loss_and_grad calls on same-shaped batches.
struct Workspace {
  detail::ForwardCache cache;
  Eigen::MatrixXd delta;
  Eigen::MatrixXd upstream;
  Eigen::MatrixXd next_upstream;
  LossAndGrad result;
};

/// Mean softmax cross-entropy and its exact gradient for every weight
/// matrix. The returned reference lives in `ws`.
template <class Input>
const LossAndGrad& loss_and_grad(const ModelState& model, const Input& inputs, std::span<const int> labels,
                                 Workspace& ws) {
  const auto& arch = model.arch;
  detail::check_labels(labels, inputs.rows(), arch.output_dim);
  if (labels.empty()) throw DegenerateError("loss_and_grad: empty batch");
  auto& cache = ws.cache;
  detail::run_forward(model, inputs, cache);
  const Eigen::Index n = cache.logits.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  // dL/dlogits = (softmax - onehot) / n, one column per sample.
  auto& delta = ws.delta;
  delta.resize(cache.logits.rows(), n);
  double loss = 0.0;
  std::size_t hits = 0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto col = cache.logits.col(c);
    Eigen::Index top = 0;
    const double mx = col.maxCoeff(&top);
    auto d = delta.col(c);
    d = (col.array() - mx).exp().matrix();
    const double z = d.sum();
    const int y = labels[static_cast<std::size_t>(c)];
    loss += std::log(z) + mx - col(y);
    d *= inv_n / z;
    d(y) -= inv_n;
    if (top == y) ++hits;  // maxCoeff reports the first maximum
  }
  loss *= inv_n;
  if (!std::isfinite(loss)) throw NumericOverflow("numeric overflow in loss");

  auto& out = ws.result;
  out.loss = loss;
  out.accuracy = static_cast<double>(hits) * inv_n;
  out.grads.resize(arch.layers());

  const std::size_t last = arch.layers() - 1;
  const double scale = model.output_scale();
  out.grads[last].resize(model.weights[last].rows(), model.weights[last].cols());
  out.grads[last].noalias() = delta * cache.hidden.back().transpose();
  out.grads[last] *= scale;
  ws.upstream.resize(model.weights[last].cols(), n);
  ws.upstream.noalias() = model.weights[last].transpose() * delta;  // dL/dh of the top hidden layer
  ws.upstream *= scale;

  for (std::size_t l = last; l-- > 0;) {
    arch.activations[l].multiply_derivative(cache.pre[l], ws.upstream);  // now dL/dz
    if (l == 0) {
      detail::first_layer_grad(ws.upstream, inputs, out.grads[0]);
    } else {
      const double s = 1.0 / std::sqrt(static_cast<double>(arch.fan_in(l)));
      out.grads[l].resize(model.weights[l].rows(), model.weights[l].cols());
      out.grads[l].noalias() = ws.upstream * cache.hidden[l - 1].transpose();
      out.grads[l] *= s;
      ws.next_upstream.resize(model.weights[l].cols(), n);
      ws.next_upstream.noalias() = model.weights[l].transpose() * ws.upstream;
      ws.next_upstream *= s;
      std::swap(ws.upstream, ws.next_upstream);
    }
  }
  for (const auto& g : out.grads) detail::check_finite(g, "gradient");
  return out;
}

template <class Input>
LossAndGrad loss_and_grad(const ModelState& model, const Input& inputs, std::span<const int> labels) {
  Workspace ws;
  loss_and_grad(model, inputs, labels, ws);
  return std::move(ws.result);
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and accuracy without gradients.
template <class Input>
Evaluation evaluate(const ModelState& model, const Input& inputs, std::span<const int> labels,
                    detail::ForwardCache& cache) {
  detail::check_labels(labels, inputs.rows(), model.arch.output_dim);
  if (labels.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  detail::run_forward(model, inputs, cache);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < cache.logits.cols(); ++c) {
    const auto col = cache.logits.col(c);
    const double mx = col.maxCoeff();
    loss += std::log((col.array() - mx).exp().sum()) + mx - col(labels[static_cast<std::size_t>(c)]);
  }
  const double n = static_cast<double>(labels.size());
  return {loss / n, detail::count_correct(cache.logits, labels) / n};
}

template <class Input>
Evaluation evaluate(const ModelState& model, const Input& inputs, std::span<const int> labels) {
  detail::ForwardCache cache;
  return evaluate(model, inputs, labels, cache);
}

/// Fraction of rows whose argmax logit (lowest index on ties) equals the label.
template <class Input>
double accuracy(const ModelState& model, const Input& inputs, std::span<const int> labels) {
  if (labels.empty()) throw DegenerateError("accuracy: empty batch");
  detail::check_labels(labels, inputs.rows(), model.arch.output_dim);
  return detail::count_correct(detail::run_forward(model, inputs).logits, labels) /
         static_cast<double>(labels.size());
}

}  // namespace groklab
