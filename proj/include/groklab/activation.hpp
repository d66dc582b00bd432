// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "groklab/error.hpp"

namespace groklab {

enum class ActivationKind { polynomial, cubic, abs_cubic, signed_square };

/// Pointwise nonlinearity. `polynomial` is b*x + a*x^2, so a plain square
/// is polynomial(b = 0, a = 1).
struct ActivationSpec {
  ActivationKind kind = ActivationKind::polynomial;
  double b = 0.0;
  double a = 1.0;

  static constexpr ActivationSpec square() { return {ActivationKind::polynomial, 0.0, 1.0}; }
  static constexpr ActivationSpec poly(double b, double a) { return {ActivationKind::polynomial, b, a}; }
  static constexpr ActivationSpec cubic() { return {ActivationKind::cubic, 0.0, 0.0}; }
  static constexpr ActivationSpec abs_cubic() { return {ActivationKind::abs_cubic, 0.0, 0.0}; }
  static constexpr ActivationSpec signed_square() { return {ActivationKind::signed_square, 0.0, 0.0}; }

  bool operator==(const ActivationSpec&) const = default;

  double apply(double x) const {
    switch (kind) {
      case ActivationKind::polynomial: return b * x + a * x * x;
      case ActivationKind::cubic: return x * x * x;
      case ActivationKind::abs_cubic: return std::abs(x * x * x);
      case ActivationKind::signed_square: return x * std::abs(x);
    }
    return 0.0;
  }

  /// d/dx of apply(). abs_cubic uses 3x|x|, which is 0 at the kink.
  double derivative(double x) const {
    switch (kind) {
      case ActivationKind::polynomial: return b + 2.0 * a * x;
      case ActivationKind::cubic: return 3.0 * x * x;
      case ActivationKind::abs_cubic: return 3.0 * x * std::abs(x);
      case ActivationKind::signed_square: return 2.0 * std::abs(x);
    }
    return 0.0;
  }

  /// out = phi(x), elementwise. `out` keeps its storage when already sized.
  void apply_into(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const {
    out.resize(x.rows(), x.cols());
    const auto xa = x.array();
    auto oa = out.array();
    switch (kind) {
      case ActivationKind::polynomial: oa = b * xa + a * xa.square(); break;
      case ActivationKind::cubic: oa = xa.cube(); break;
      case ActivationKind::abs_cubic: oa = xa.cube().abs(); break;
      case ActivationKind::signed_square: oa = xa * xa.abs(); break;
    }
  }

  /// grad *= phi'(x), elementwise.
  void multiply_derivative(const Eigen::MatrixXd& x, Eigen::MatrixXd& grad) const {
    const auto xa = x.array();
    auto ga = grad.array();
    switch (kind) {
      case ActivationKind::polynomial: ga *= b + 2.0 * a * xa; break;
      case ActivationKind::cubic: ga *= 3.0 * xa.square(); break;
      case ActivationKind::abs_cubic: ga *= 3.0 * xa * xa.abs(); break;
      case ActivationKind::signed_square: ga *= 2.0 * xa.abs(); break;
    }
  }

  /// Short human-readable form, e.g. "x+0.25x^2".
  std::string label() const {
    switch (kind) {
      case ActivationKind::cubic: return "x^3";
      case ActivationKind::abs_cubic: return "|x^3|";
      case ActivationKind::signed_square: return "x^2sign(x)";
      case ActivationKind::polynomial: break;
    }
    std::ostringstream os;
    if (b != 0.0) {
      if (b != 1.0) os << b;
      os << "x";
    }
    if (a != 0.0) {
      if (b != 0.0) os << "+";
      if (a != 1.0) os << a;
      os << "x^2";
    }
    if (b == 0.0 && a == 0.0) os << "0";
    return os.str();
  }
};

inline std::string_view kind_name(ActivationKind k) {
  switch (k) {
    case ActivationKind::polynomial: return "polynomial";
    case ActivationKind::cubic: return "cubic";
    case ActivationKind::abs_cubic: return "abs_cubic";
    case ActivationKind::signed_square: return "signed_square";
  }
  return "?";
}

inline ActivationKind parse_kind(std::string_view name) {
  if (name == "polynomial") return ActivationKind::polynomial;
  if (name == "cubic") return ActivationKind::cubic;
  if (name == "abs_cubic") return ActivationKind::abs_cubic;
  if (name == "signed_square") return ActivationKind::signed_square;
  throw ArgumentError("unknown activation kind '" + std::string(name) + "'");
}

}  // namespace groklab
