// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "groklab/error.hpp"
#include "groklab/network.hpp"

namespace groklab {

struct AdamWConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.1;

  bool operator==(const AdamWConfig&) const = default;
};

/// Adam moments plus step counter; moment shapes mirror the model.
struct OptimizerState {
  AdamWConfig config;
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  long step = 0;

  static OptimizerState for_model(const ModelState& model, const AdamWConfig& config) {
    OptimizerState st{config, {}, {}, 0};
    for (const auto& w : model.weights) {
      st.m.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
      st.v.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    return st;
  }
};

/// One AdamW update with decoupled decay:
///   w <- w - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * w)
inline void adamw_step(OptimizerState& opt, ModelState& model, const std::vector<Eigen::MatrixXd>& grads) {
  if (grads.size() != model.weights.size() || opt.m.size() != model.weights.size())
    throw ArgumentError("adamw_step: gradient/state layer count mismatch");
  const auto& c = opt.config;
  ++opt.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(opt.step));
  for (std::size_t l = 0; l < grads.size(); ++l) {
    auto& w = model.weights[l];
    if (grads[l].rows() != w.rows() || grads[l].cols() != w.cols())
      throw ArgumentError("adamw_step: gradient shape mismatch");
    opt.m[l] = c.beta1 * opt.m[l] + (1.0 - c.beta1) * grads[l];
    opt.v[l] = c.beta2 * opt.v[l] + (1.0 - c.beta2) * grads[l].cwiseAbs2();
    const auto update = (opt.m[l].array() / bc1) / ((opt.v[l].array() / bc2).sqrt() + c.eps);
    w.array() -= c.lr * (update + c.weight_decay * w.array());
  }
}

}  // namespace groklab
