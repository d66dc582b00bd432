// SPDX-License-Identifier: Apache-2.0
#pragma once

// PCA of last-layer weight rows (one row per output class), projection pairs
// on consecutive components, and equal-size cluster detection used to read
// a factorization k * m = P off the projected class pattern.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "groklab/error.hpp"

namespace groklab {

struct PcaResult {
  Eigen::MatrixXd components;          // features x count, orthonormal columns
  Eigen::VectorXd explained_variance;  // nonincreasing
  Eigen::MatrixXd projections;         // rows x count, centered rows in component coordinates
  Eigen::RowVectorXd mean;

  Eigen::Index count() const { return components.cols(); }
};

namespace detail {

/// Flip each column so its largest-magnitude coordinate is positive.
inline void fix_signs(Eigen::MatrixXd& dirs) {
  for (Eigen::Index c = 0; c < dirs.cols(); ++c) {
    Eigen::Index at = 0;
    dirs.col(c).cwiseAbs().maxCoeff(&at);
    if (dirs(at, c) < 0.0) dirs.col(c) *= -1.0;
  }
}

}  // namespace detail

/// Covariance PCA (centered, not standardized). Keeps min(rows, features)
/// components; the eigenproblem is solved on whichever of the feature
/// covariance or the row Gram matrix is smaller.
inline PcaResult pca(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  if (n < 2) throw ArgumentError("pca: need at least 2 rows");
  if (d < 1) throw ArgumentError("pca: need at least 1 column");
  if (!rows.allFinite()) throw ArgumentError("pca: non-finite input");

  PcaResult r;
  r.mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - r.mean;
  const double denom = static_cast<double>(n - 1);
  const Eigen::Index keep = std::min(n, d);

  Eigen::MatrixXd dirs(d, keep);
  Eigen::VectorXd var(keep);
  if (d <= n) {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    for (Eigen::Index c = 0; c < keep; ++c) {
      dirs.col(c) = es.eigenvectors().col(d - 1 - c);
      var(c) = std::max(0.0, es.eigenvalues()(d - 1 - c));
    }
  } else {
    // cov = X^T X / (n-1) shares its nonzero spectrum with G = X X^T / (n-1);
    // a unit eigenvector u of G maps to the direction X^T u / sqrt((n-1) lambda).
    const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
    Eigen::Index filled = 0;
    for (Eigen::Index c = 0; c < keep; ++c) {
      const double lambda = es.eigenvalues()(n - 1 - c);
      if (lambda <= top * 1e-12 || lambda <= 0.0) break;
      dirs.col(c) = centered.transpose() * es.eigenvectors().col(n - 1 - c) / std::sqrt(denom * lambda);
      var(c) = lambda;
      ++filled;
    }
    if (filled < keep) {
      // complete with an orthonormal basis of the complement; variance 0
      Eigen::MatrixXd q = Eigen::MatrixXd::Identity(d, d);
      if (filled > 0) q = Eigen::HouseholderQR<Eigen::MatrixXd>(dirs.leftCols(filled)).householderQ();
      for (Eigen::Index c = filled; c < keep; ++c) {
        dirs.col(c) = q.col(c);
        var(c) = 0.0;
      }
    }
  }
  detail::fix_signs(dirs);
  r.components = std::move(dirs);
  r.explained_variance = std::move(var);
  r.projections = centered * r.components;
  return r;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Class rows projected on components (2m, 2m + 1); points[label].
struct ProjectionPair {
  int pair_index = 0;
  std::vector<Point2> points;
};

inline std::vector<ProjectionPair> projection_pairs(const PcaResult& result, int count) {
  if (count < 0) throw ArgumentError("projection_pairs: negative count");
  if (2 * static_cast<Eigen::Index>(count) > result.count())
    throw ArgumentError("projection_pairs: " + std::to_string(count) + " pairs need " + std::to_string(2 * count) +
                        " components, only " + std::to_string(result.count()) + " available");
  std::vector<ProjectionPair> out;
  for (int m = 0; m < count; ++m) {
    ProjectionPair pair{m, {}};
    for (Eigen::Index row = 0; row < result.projections.rows(); ++row)
      pair.points.push_back({result.projections(row, 2 * m), result.projections(row, 2 * m + 1)});
    out.push_back(std::move(pair));
  }
  return out;
}

/// 1 - (std of distances to the centroid) / (mean distance), clamped to [0, 1].
inline double circularity_score(const std::vector<Point2>& points) {
  if (points.size() < 3) throw ArgumentError("circularity_score: need at least 3 points");
  double cx = 0.0, cy = 0.0;
  for (const auto& p : points) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(points.size());
  cy /= static_cast<double>(points.size());
  std::vector<double> radii;
  for (const auto& p : points) radii.push_back(std::hypot(p.x - cx, p.y - cy));
  const double mean = std::accumulate(radii.begin(), radii.end(), 0.0) / static_cast<double>(radii.size());
  if (!(mean > 0.0)) throw DegenerateError("circularity_score: all points identical");
  double ss = 0.0;
  for (double r : radii) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(radii.size()));
  return std::clamp(1.0 - sd / mean, 0.0, 1.0);
}

/// Partition of point labels; each cluster sorted, clusters ordered by
/// their smallest label.
using Clusters = std::vector<std::vector<int>>;

inline constexpr double default_link_factor = 2.0;

/// Single-linkage agglomeration: clusters merge while their closest members
/// are within link_factor * (median nearest-neighbour distance).
inline Clusters cluster_points(const std::vector<Point2>& points, double link_factor = default_link_factor) {
  const std::size_t n = points.size();
  if (n < 2) throw ArgumentError("cluster_points: need at least 2 points");
  auto dist = [&](std::size_t a, std::size_t b) { return std::hypot(points[a].x - points[b].x, points[a].y - points[b].y); };

  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) nearest[a] = std::min(nearest[a], dist(a, b));
  std::vector<double> sorted = nearest;
  std::sort(sorted.begin(), sorted.end());
  const double median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const double threshold = link_factor * median;

  // Single linkage with a fixed cut equals connected components of the
  // graph joining points no farther apart than the cut.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (dist(a, b) <= threshold) {
        const auto ra = find(a), rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }

  Clusters out;
  std::vector<int> slot(n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    const auto root = find(a);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[static_cast<std::size_t>(slot[root])].push_back(static_cast<int>(a));
  }
  return out;
}

struct FactorizationResult {
  int clusters = 0;      // k
  int cluster_size = 0;  // m, with k * m == P
  int pair_index = -1;
  std::optional<int> residue_modulus;
  double circularity = 0.0;
};

/// (k, m) when the clusters are k equal groups of m labels with 1 < k < P.
inline std::optional<FactorizationResult> infer_factorization(const Clusters& clusters, int p) {
  std::vector<int> seen(static_cast<std::size_t>(std::max(p, 0)), 0);
  std::size_t total = 0;
  for (const auto& c : clusters)
    for (int label : c) {
      if (label < 0 || label >= p) throw ArgumentError("infer_factorization: label outside [0, P)");
      if (seen[static_cast<std::size_t>(label)]++) throw ArgumentError("infer_factorization: duplicate label");
      ++total;
    }
  if (total != static_cast<std::size_t>(p)) throw ArgumentError("infer_factorization: clusters must cover all P labels");

  const int k = static_cast<int>(clusters.size());
  if (k <= 1 || k >= p) return std::nullopt;
  const auto m = clusters.front().size();
  for (const auto& c : clusters)
    if (c.size() != m) return std::nullopt;

  FactorizationResult r;
  r.clusters = k;
  r.cluster_size = static_cast<int>(m);
  for (int d = p; d > 1; --d) {
    if (p % d != 0) continue;
    bool congruent = true;
    for (const auto& c : clusters) {
      for (int label : c)
        if ((label - c.front()) % d != 0) {
          congruent = false;
          break;
        }
      if (!congruent) break;
    }
    if (congruent) {
      r.residue_modulus = d;
      break;
    }
  }
  if (r.clusters * r.cluster_size != p) throw Error("infer_factorization: internal invariant k*m == P violated");
  return r;
}

struct PairScan {
  int pair_index = 0;
  Clusters clusters;
  double circularity = 0.0;
  std::optional<FactorizationResult> factorization;
};

struct ScanResult {
  std::vector<PairScan> pairs;
  std::optional<FactorizationResult> best;
};

/// Clusters every projection pair and keeps the valid factorization whose
/// pair is the most circular.
inline ScanResult scan_factorization(const PcaResult& result, int p, int pair_count,
                                     double link_factor = default_link_factor) {
  ScanResult scan;
  for (const auto& pair : projection_pairs(result, pair_count)) {
    PairScan ps;
    ps.pair_index = pair.pair_index;
    ps.clusters = cluster_points(pair.points, link_factor);
    try {
      ps.circularity = circularity_score(pair.points);
    } catch (const DegenerateError&) {
      ps.circularity = 0.0;
    }
    ps.factorization = infer_factorization(ps.clusters, p);
    if (ps.factorization) {
      ps.factorization->pair_index = ps.pair_index;
      ps.factorization->circularity = ps.circularity;
      if (!scan.best || ps.circularity > scan.best->circularity) scan.best = ps.factorization;
    }
    scan.pairs.push_back(std::move(ps));
  }
  return scan;
}

}  // namespace groklab
