#pragma once

// Test-only reference implementations, kept independent of the library's
// vectorized code paths: plain scalar loops, recomputing everything from
// scratch. Slow by construction.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pointgpe/rng.hpp"
#include "pointgpe/types.hpp"

namespace oracle {

inline double dist2(const pointgpe::PointMatrix<double>& pts, int a,
                    const Eigen::RowVector3d& q) {
  double d = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double t = pts(a, c) - q[c];
    d += t * t;
  }
  return d;
}

inline bool lex_then_index_less(const pointgpe::PointMatrix<double>& pts, int a, int b) {
  for (int c = 0; c < 3; ++c) {
    if (pts(a, c) < pts(b, c)) return true;
    if (pts(a, c) > pts(b, c)) return false;
  }
  return a < b;
}

/// Greedy farthest point sampling recomputing every min-distance from
/// scratch at each step.
inline std::vector<int> fps_bruteforce(const pointgpe::PointMatrix<double>& pts, int m) {
  const int n = static_cast<int>(pts.rows());
  Eigen::RowVector3d centroid = Eigen::RowVector3d::Zero();
  for (int i = 0; i < n; ++i) centroid += pts.row(i);
  centroid /= n;

  int seed = 0;
  for (int i = 1; i < n; ++i) {
    const double di = dist2(pts, i, centroid);
    const double ds = dist2(pts, seed, centroid);
    if (di > ds || (di == ds && lex_then_index_less(pts, i, seed))) seed = i;
  }

  std::vector<int> selected = {seed};
  while (static_cast<int>(selected.size()) < m) {
    int best = -1;
    double best_min = -1.0;
    for (int i = 0; i < n; ++i) {
      if (std::find(selected.begin(), selected.end(), i) != selected.end()) continue;
      double min_d = std::numeric_limits<double>::infinity();
      for (const int s : selected)
        min_d = std::min(min_d, dist2(pts, i, Eigen::RowVector3d(pts.row(s))));
      if (best < 0 || min_d > best_min ||
          (min_d == best_min && lex_then_index_less(pts, i, best))) {
        best = i;
        best_min = min_d;
      }
    }
    selected.push_back(best);
  }
  return selected;
}

/// Exhaustive k-NN: full distance sort per query with the tie rules.
inline std::vector<std::vector<int>> knn_bruteforce(const pointgpe::PointMatrix<double>& queries,
                                                    const pointgpe::PointMatrix<double>& pts,
                                                    int k) {
  const int n = static_cast<int>(pts.rows());
  std::vector<std::vector<int>> rows;
  for (int q = 0; q < queries.rows(); ++q) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    const Eigen::RowVector3d query = queries.row(q);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double da = dist2(pts, a, query);
      const double db = dist2(pts, b, query);
      if (da != db) return da < db;
      return lex_then_index_less(pts, a, b);
    });
    order.resize(k);
    rows.push_back(order);
  }
  return rows;
}

/// Scalar double-loop classifier: per-row dot product, exponential
/// activation, one-hot accumulation.
inline Eigen::VectorXd classifier_logits_bruteforce(const Eigen::VectorXd& query,
                                                    const Eigen::MatrixXd& bank_features,
                                                    const std::vector<int>& labels,
                                                    int num_classes, double gamma) {
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(num_classes);
  for (int m = 0; m < bank_features.rows(); ++m) {
    double sim = 0.0;
    for (int d = 0; d < bank_features.cols(); ++d) sim += query[d] * bank_features(m, d);
    logits[labels[m]] += std::exp(-gamma * (1.0 - sim));
  }
  return logits;
}

/// Random cloud with coordinates uniform in [-1, 1]^3.
inline pointgpe::PointMatrix<double> random_cloud(pointgpe::rng::Engine& engine, int n) {
  pointgpe::PointMatrix<double> pts(n, 3);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) pts(i, c) = engine.range(-1.0, 1.0);
  return pts;
}

/// Random unit vector of the given dimension.
inline Eigen::VectorXd random_unit_vector(pointgpe::rng::Engine& engine, int dim) {
  Eigen::VectorXd v(dim);
  for (int d = 0; d < dim; ++d) v[d] = engine.normal();
  const double norm = v.norm();
  return norm > 0 ? Eigen::VectorXd(v / norm) : Eigen::VectorXd::Unit(dim, 0);
}

}  // namespace oracle
