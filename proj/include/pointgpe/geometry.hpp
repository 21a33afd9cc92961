#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointgpe/types.hpp"

namespace pointgpe {

/// How group_normalize pools the standard deviation of a neighborhood:
/// one scalar over every entry, or one scalar per column.
enum class GroupStdMode { pooled, per_dimension };

/// Neighborhood gathered around one sampled center. Rows of coords/feats
/// follow neighbor_indices; no normalization is applied by the gather.
template <typename Scalar>
struct GroupedNeighborhood {
  int center_index = -1;
  std::vector<int> neighbor_indices;
  PointMatrix<Scalar> coords;   // K x 3
  FeatureMatrix<Scalar> feats;  // K x D
};

namespace detail {

/// Deterministic point order: lexicographic (x, y, z), then index. Used to
/// break exact distance ties so sampling and neighbor search are invariant
/// to input permutation on generic clouds.
template <typename Derived>
bool coord_index_less(const Eigen::MatrixBase<Derived>& pts, Eigen::Index a, Eigen::Index b) {
  for (int c = 0; c < 3; ++c) {
    if (pts(a, c) < pts(b, c)) return true;
    if (pts(a, c) > pts(b, c)) return false;
  }
  return a < b;
}

/// Subtract per-column means, then scale by 1/(std + eps) with the standard
/// deviation pooled over all centered entries (population convention) or
/// taken per column.
template <typename Derived>
typename Derived::PlainObject center_scale(const Eigen::MatrixBase<Derived>& m, GroupStdMode mode,
                                           typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  typename Derived::PlainObject centered = m.rowwise() - m.colwise().mean();
  if (mode == GroupStdMode::pooled) {
    const Scalar std_all =
        std::sqrt(centered.squaredNorm() / Scalar(centered.rows() * centered.cols()));
    centered /= (std_all + eps);
  } else {
    for (Eigen::Index c = 0; c < centered.cols(); ++c) {
      const Scalar std_col = std::sqrt(centered.col(c).squaredNorm() / Scalar(centered.rows()));
      centered.col(c) /= (std_col + eps);
    }
  }
  return centered;
}

}  // namespace detail

/// Centers the cloud on its centroid and scales it so the farthest point sits
/// on the unit sphere. A single repeated point collapses to the origin. Point
/// order and label are preserved.
template <typename Scalar>
PointCloud<Scalar> normalize_unit_sphere(const PointCloud<Scalar>& cloud) {
  if (cloud.points.rows() < 1)
    throw std::invalid_argument("normalize_unit_sphere: empty cloud");
  if (!cloud.points.allFinite())
    throw std::invalid_argument("normalize_unit_sphere: non-finite coordinate in input");
  PointCloud<Scalar> out;
  out.label = cloud.label;
  const Eigen::Matrix<Scalar, 1, 3> centroid = cloud.points.colwise().mean();
  out.points = cloud.points.rowwise() - centroid;
  const Scalar max_norm = out.points.rowwise().norm().maxCoeff();
  if (max_norm > Scalar(0)) out.points /= max_norm;
  return out;
}

/// Greedy farthest point sampling of m indices. The seed is the point
/// farthest from the centroid; every later pick maximizes the minimum
/// distance to the already selected set. Squared distances are compared
/// (same ordering as Euclidean); ties fall back to coord_index_less.
template <typename Derived>
std::vector<int> fps(const Eigen::MatrixBase<Derived>& points_in, int m) {
  using Scalar = typename Derived::Scalar;
  const PointMatrix<Scalar> pts = points_in;
  const int n = static_cast<int>(pts.rows());
  if (m < 1 || m > n)
    throw std::invalid_argument("fps: m must be in [1, N], got m=" + std::to_string(m) +
                                " with N=" + std::to_string(n));

  const Eigen::Matrix<Scalar, 1, 3> centroid = pts.colwise().mean();
  int seed = 0;
  Scalar seed_d2 = (pts.row(0) - centroid).squaredNorm();
  for (int i = 1; i < n; ++i) {
    const Scalar d2 = (pts.row(i) - centroid).squaredNorm();
    if (d2 > seed_d2 || (d2 == seed_d2 && detail::coord_index_less(pts, i, seed))) {
      seed = i;
      seed_d2 = d2;
    }
  }

  std::vector<int> selected;
  selected.reserve(m);
  selected.push_back(seed);
  std::vector<char> taken(n, 0);
  taken[seed] = 1;
  Eigen::VectorX<Scalar> min_d2 = (pts.rowwise() - pts.row(seed)).rowwise().squaredNorm();

  while (static_cast<int>(selected.size()) < m) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best < 0 || min_d2[i] > min_d2[best] ||
          (min_d2[i] == min_d2[best] && detail::coord_index_less(pts, i, best))) {
        best = i;
      }
    }
    selected.push_back(best);
    taken[best] = 1;
    min_d2 = min_d2.cwiseMin((pts.rowwise() - pts.row(best)).rowwise().squaredNorm());
  }
  return selected;
}

/// Exact k nearest neighbors of every query row over the given point set.
/// Row q lists the k nearest point indices sorted by ascending distance;
/// equal distances are ordered by coord_index_less. k > N is an error unless
/// clamp_k is set, which shrinks k to N.
template <typename DerivedQ, typename DerivedP>
IndexMatrix knn(const Eigen::MatrixBase<DerivedQ>& queries_in,
                const Eigen::MatrixBase<DerivedP>& points_in, int k, bool clamp_k = false) {
  using Scalar = typename DerivedP::Scalar;
  const PointMatrix<Scalar> queries = queries_in;
  const PointMatrix<Scalar> pts = points_in;
  const int n = static_cast<int>(pts.rows());
  const int nq = static_cast<int>(queries.rows());
  if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
  if (n < 1) throw std::invalid_argument("knn: empty point set");
  if (k > n) {
    if (!clamp_k)
      throw std::invalid_argument("knn: k=" + std::to_string(k) + " exceeds point count " +
                                  std::to_string(n) + " (set clamp_k to allow)");
    k = n;
  }

  IndexMatrix out(nq, k);
  std::vector<int> order(n);
  Eigen::VectorX<Scalar> d2(n);
  for (int q = 0; q < nq; ++q) {
    d2 = (pts.rowwise() - queries.row(q)).rowwise().squaredNorm();
    std::iota(order.begin(), order.end(), 0);
    const auto nearer = [&](int a, int b) {
      if (d2[a] != d2[b]) return d2[a] < d2[b];
      return detail::coord_index_less(pts, a, b);
    };
    if (k < n) std::nth_element(order.begin(), order.begin() + k, order.end(), nearer);
    std::sort(order.begin(), order.begin() + k, nearer);
    for (int j = 0; j < k; ++j) out(q, j) = order[j];
  }
  return out;
}

/// Copies the rows named by neighbor_indices out of the parent coordinate and
/// feature matrices, in neighbor order.
template <typename DerivedC, typename DerivedF>
GroupedNeighborhood<typename DerivedC::Scalar> gather_group(
    int center_index, std::span<const int> neighbor_indices,
    const Eigen::MatrixBase<DerivedC>& coords, const Eigen::MatrixBase<DerivedF>& feats) {
  using Scalar = typename DerivedC::Scalar;
  const Eigen::Index n = coords.rows();
  if (feats.rows() != n)
    throw std::invalid_argument("gather_group: coords and feats row counts differ");
  if (center_index < 0) throw std::invalid_argument("gather_group: negative center index");
  GroupedNeighborhood<Scalar> group;
  group.center_index = center_index;
  group.neighbor_indices.assign(neighbor_indices.begin(), neighbor_indices.end());
  const int k = static_cast<int>(group.neighbor_indices.size());
  group.coords.resize(k, 3);
  group.feats.resize(k, feats.cols());
  for (int r = 0; r < k; ++r) {
    const int idx = group.neighbor_indices[r];
    if (idx < 0 || idx >= n)
      throw std::invalid_argument("gather_group: neighbor index " + std::to_string(idx) +
                                  " out of range [0, " + std::to_string(n) + ")");
    group.coords.row(r) = coords.row(idx);
    group.feats.row(r) = feats.row(idx);
  }
  return group;
}

/// Normalizes a gathered neighborhood: per-axis means are subtracted from
/// coords and feats independently, then each is divided by its own standard
/// deviation (see GroupStdMode) plus eps. Degenerate groups map to zero.
template <typename Scalar>
GroupedNeighborhood<Scalar> group_normalize(const GroupedNeighborhood<Scalar>& group,
                                            GroupStdMode mode = GroupStdMode::pooled,
                                            Scalar eps = Scalar(1e-5)) {
  if (group.coords.rows() < 1) throw std::invalid_argument("group_normalize: empty group");
  GroupedNeighborhood<Scalar> out;
  out.center_index = group.center_index;
  out.neighbor_indices = group.neighbor_indices;
  out.coords = detail::center_scale(group.coords, mode, eps);
  out.feats = detail::center_scale(group.feats, mode, eps);
  return out;
}

}  // namespace pointgpe
