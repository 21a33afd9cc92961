#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>

namespace pointgpe {

/// N x 3 coordinate matrix, one point per row.
template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// N x D per-point feature matrix.
template <typename Scalar>
using FeatureMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// M x k neighbor-index matrix, one query per row.
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Unordered set of 3D points with an optional class label.
template <typename Scalar>
struct PointCloud {
  PointMatrix<Scalar> points;
  std::optional<int> label;

  Eigen::Index size() const { return points.rows(); }

  template <typename Target>
  PointCloud<Target> cast() const {
    return {points.template cast<Target>(), label};
  }
};

using PointCloudf = PointCloud<float>;
using PointCloudd = PointCloud<double>;

/// Global descriptor of one cloud: the per-stage pooled vectors concatenated
/// in stage order and L2-normalized.
template <typename Scalar>
struct GlobalFeature {
  Eigen::VectorX<Scalar> values;
  std::optional<int> source_label;
};

/// Ingestion or file-format failure; the message names the offending path.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pointgpe
