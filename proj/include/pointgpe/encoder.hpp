#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pointgpe/geometry.hpp"
#include "pointgpe/types.hpp"

namespace pointgpe {

/// Stage feature update rule. additive_squared adds the squared Gaussian
/// response of the group coordinates to the gathered features; multiplicative
/// scales the gathered features by the response instead. The CLI spellings
/// are "paper-literal" and "multiplicative".
enum class AggregationMode { additive_squared, multiplicative };

std::string to_string(AggregationMode mode);
AggregationMode aggregation_mode_from_string(const std::string& name);

std::string to_string(GroupStdMode mode);
GroupStdMode group_std_mode_from_string(const std::string& name);

/// All pipeline hyperparameters. Feature dimension D = 3 * refs_per_axis per
/// stage; the global feature has stages * D entries.
struct EncoderConfig {
  int refs_per_axis = 9;     // V: reference values per axis
  double sigma = 0.35;       // Gaussian width shared by embedding and stages
  int neighbors = 120;       // K
  int stages = 4;            // S
  AggregationMode aggregation = AggregationMode::additive_squared;
  bool normalize_input = true;
  bool clamp_k = false;
  GroupStdMode group_std = GroupStdMode::pooled;
  std::vector<double> stage_sigma;  // optional per-stage override, empty or one entry per stage

  int feature_dim() const { return 3 * refs_per_axis; }
  int global_dim() const { return stages * feature_dim(); }

  /// Sigma used by the aggregation of the given stage (1-based).
  double stage_aggregation_sigma(int stage) const {
    return stage_sigma.empty() ? sigma : stage_sigma.at(static_cast<size_t>(stage) - 1);
  }

  void validate() const;

  /// Canonical key=value view of every field that affects encoding.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;

  /// Stable hash of to_key_values(), used to detect banks built under a
  /// different configuration.
  std::string fingerprint() const;
};

/// Point set flowing between encoder stages: coordinates plus the per-point
/// feature matrix, with the number of stages already applied.
template <typename Scalar>
struct StageState {
  PointMatrix<Scalar> coords;   // N_s x 3
  FeatureMatrix<Scalar> feats;  // N_s x D
  int stage_index = 0;
};

/// V reference values uniformly spaced on [-1, 1] inclusive; V = 1
/// degenerates to {0}.
template <typename Scalar = double>
Eigen::VectorX<Scalar> make_reference_grid(int refs_per_axis) {
  if (refs_per_axis < 1)
    throw std::invalid_argument("make_reference_grid: refs_per_axis must be >= 1");
  Eigen::VectorX<Scalar> refs(refs_per_axis);
  if (refs_per_axis == 1) {
    refs[0] = Scalar(0);
    return refs;
  }
  for (int j = 0; j < refs_per_axis; ++j)
    refs[j] = Scalar(-1) + Scalar(2) * Scalar(j) / Scalar(refs_per_axis - 1);
  return refs;
}

/// Gaussian response of every coordinate against every reference value:
/// column 3*j + axis holds exp(-(c_axis - v_j)^2 / (2 sigma^2)). Each
/// reference therefore contributes one (x, y, z) column triple, and every
/// entry lies in (0, 1] with 1 exactly at coincidence.
template <typename Derived, typename DerivedR>
FeatureMatrix<typename Derived::Scalar> gpe_encode(const Eigen::MatrixBase<Derived>& coords_in,
                                                   const Eigen::MatrixBase<DerivedR>& refs,
                                                   typename Derived::Scalar sigma) {
  using Scalar = typename Derived::Scalar;
  if (!(sigma > Scalar(0)))
    throw std::invalid_argument("gpe_encode: sigma must be positive");
  const PointMatrix<Scalar> coords = coords_in;
  const int v = static_cast<int>(refs.size());
  FeatureMatrix<Scalar> out(coords.rows(), 3 * v);
  const Scalar inv_two_sigma2 = Scalar(1) / (Scalar(2) * sigma * sigma);
  for (int j = 0; j < v; ++j) {
    out.middleCols(3 * j, 3) =
        (-(coords.array() - Scalar(refs[j])).square() * inv_two_sigma2).exp();
  }
  return out;
}

/// Combines gathered neighborhood features with the Gaussian response of the
/// normalized group coordinates. Output keeps the K x D shape.
template <typename DerivedF, typename DerivedC, typename DerivedR>
FeatureMatrix<typename DerivedF::Scalar> gpe_aggregate(
    const Eigen::MatrixBase<DerivedF>& group_feats,
    const Eigen::MatrixBase<DerivedC>& normalized_group_coords,
    const Eigen::MatrixBase<DerivedR>& refs, typename DerivedF::Scalar sigma,
    AggregationMode mode) {
  using Scalar = typename DerivedF::Scalar;
  if (group_feats.rows() != normalized_group_coords.rows())
    throw std::invalid_argument("gpe_aggregate: feats and coords row counts differ");
  if (group_feats.cols() != 3 * refs.size())
    throw std::invalid_argument("gpe_aggregate: feature dimension " +
                                std::to_string(group_feats.cols()) + " does not match 3*V = " +
                                std::to_string(3 * refs.size()));
  const FeatureMatrix<Scalar> enc = gpe_encode(normalized_group_coords, refs, sigma);
  FeatureMatrix<Scalar> out(group_feats.rows(), group_feats.cols());
  if (mode == AggregationMode::additive_squared)
    out = group_feats.array() + enc.array().square();
  else
    out = group_feats.array() * enc.array();
  return out;
}

/// Convenience overload taking the grid and sigma from the config.
template <typename DerivedF, typename DerivedC>
FeatureMatrix<typename DerivedF::Scalar> gpe_aggregate(
    const Eigen::MatrixBase<DerivedF>& group_feats,
    const Eigen::MatrixBase<DerivedC>& normalized_group_coords, const EncoderConfig& config) {
  using Scalar = typename DerivedF::Scalar;
  return gpe_aggregate(group_feats, normalized_group_coords,
                       make_reference_grid<Scalar>(config.refs_per_axis), Scalar(config.sigma),
                       config.aggregation);
}

/// Column-wise mean plus column-wise max over the neighbor dimension.
/// Invariant to any permutation of the rows.
template <typename Derived>
Eigen::RowVectorX<typename Derived::Scalar> neighbor_pool(
    const Eigen::MatrixBase<Derived>& group_feats) {
  if (group_feats.rows() < 1) throw std::invalid_argument("neighbor_pool: empty group");
  return group_feats.colwise().mean() + group_feats.colwise().maxCoeff();
}

/// One encoder stage: sample floor(N/2) centers by FPS, gather and normalize
/// each center's K-neighborhood, aggregate, and pool. The returned coords are
/// the centers' original coordinates, not the group-normalized ones.
template <typename Scalar>
StageState<Scalar> encode_stage(const StageState<Scalar>& state, const EncoderConfig& config) {
  config.validate();
  const int n = static_cast<int>(state.coords.rows());
  if (n < 2) throw std::invalid_argument("encode_stage: need at least 2 points");
  if (state.feats.rows() != n)
    throw std::invalid_argument("encode_stage: coords and feats row counts differ");
  if (state.feats.cols() != config.feature_dim())
    throw std::invalid_argument("encode_stage: feature dimension " +
                                std::to_string(state.feats.cols()) +
                                " does not match config (" +
                                std::to_string(config.feature_dim()) + ")");

  int k = config.neighbors;
  if (k > n) {
    if (!config.clamp_k)
      throw std::invalid_argument("encode_stage: K=" + std::to_string(k) +
                                  " exceeds stage point count " + std::to_string(n) +
                                  " (enable clamp_k to shrink K)");
    k = n;
  }

  const int m = n / 2;
  const std::vector<int> centers = fps(state.coords, m);
  PointMatrix<Scalar> center_coords(m, 3);
  for (int c = 0; c < m; ++c) center_coords.row(c) = state.coords.row(centers[c]);

  const IndexMatrix neighbor_idx = knn(center_coords, state.coords, k);
  const Eigen::VectorX<Scalar> refs = make_reference_grid<Scalar>(config.refs_per_axis);
  const Scalar sigma = Scalar(config.stage_aggregation_sigma(state.stage_index + 1));

  FeatureMatrix<Scalar> pooled(m, config.feature_dim());
  for (int c = 0; c < m; ++c) {
    const std::span<const int> idx(neighbor_idx.row(c).data(), static_cast<size_t>(k));
    const auto group = gather_group(c, idx, state.coords, state.feats);
    const auto normalized = group_normalize(group, config.group_std);
    pooled.row(c) =
        neighbor_pool(gpe_aggregate(normalized.feats, normalized.coords, refs, sigma,
                                    config.aggregation));
  }
  return {std::move(center_coords), std::move(pooled), state.stage_index + 1};
}

/// Full encoder: optional unit-sphere normalization, initial Gaussian
/// embedding, S hierarchical stages, then per-stage global mean+max pooling
/// concatenated in stage order and L2-normalized.
template <typename Scalar>
GlobalFeature<Scalar> encode(const PointCloud<Scalar>& cloud, const EncoderConfig& config) {
  config.validate();
  const Eigen::Index n = cloud.points.rows();
  const Eigen::Index min_points = Eigen::Index(1) << config.stages;
  if (n < min_points)
    throw std::invalid_argument("encode: cloud has " + std::to_string(n) + " points; " +
                                std::to_string(config.stages) + " stages require at least " +
                                std::to_string(min_points));

  PointCloud<Scalar> prepared = config.normalize_input ? normalize_unit_sphere(cloud) : cloud;
  const Eigen::VectorX<Scalar> refs = make_reference_grid<Scalar>(config.refs_per_axis);

  StageState<Scalar> state;
  state.feats = gpe_encode(prepared.points, refs, Scalar(config.sigma));
  state.coords = std::move(prepared.points);
  state.stage_index = 0;

  const int d = config.feature_dim();
  Eigen::VectorX<Scalar> values(config.global_dim());
  for (int s = 1; s <= config.stages; ++s) {
    state = encode_stage(state, config);
    values.segment((s - 1) * d, d) =
        (state.feats.colwise().mean() + state.feats.colwise().maxCoeff()).transpose();
  }

  const Scalar norm = values.norm();
  if (norm > Scalar(0)) values /= norm;
  return {std::move(values), cloud.label};
}

}  // namespace pointgpe
