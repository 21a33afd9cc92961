#include "pointgpe/synthetic.hpp"

#include <cmath>

#include "pointgpe/rng.hpp"

namespace pointgpe {

namespace {

constexpr double kTau = 6.283185307179586476925287;

Eigen::RowVector3d sphere_sample(rng::Engine& engine) {
  Eigen::RowVector3d p(engine.normal(), engine.normal(), engine.normal());
  const double norm = p.norm();
  if (norm < 1e-12) return {1.0, 0.0, 0.0};
  return p / norm;
}

Eigen::RowVector3d cube_sample(rng::Engine& engine) {
  const int face = static_cast<int>(engine.bounded(6));
  const double u = engine.range(-1.0, 1.0);
  const double v = engine.range(-1.0, 1.0);
  const double s = (face % 2 == 0) ? 1.0 : -1.0;
  switch (face / 2) {
    case 0: return {s, u, v};
    case 1: return {u, s, v};
    default: return {u, v, s};
  }
}

Eigen::RowVector3d disk_sample(rng::Engine& engine) {
  const double r = std::sqrt(engine.unit());
  const double a = kTau * engine.unit();
  return {r * std::cos(a), r * std::sin(a), 0.0};
}

}  // namespace

PointCloudd make_shape_cloud(ShapeFamily family, int n_points, uint64_t seed) {
  if (n_points < 1) throw std::invalid_argument("make_shape_cloud: n_points must be >= 1");
  rng::Engine engine(seed);

  // random pose: full spin about z, mild tilt about x, uniform scale
  const double spin = kTau * engine.unit();
  const double tilt = engine.range(-0.26, 0.26);
  const double scale = engine.range(0.8, 1.2);
  Eigen::Matrix3d rz;
  rz << std::cos(spin), -std::sin(spin), 0.0,
        std::sin(spin), std::cos(spin), 0.0,
        0.0, 0.0, 1.0;
  Eigen::Matrix3d rx;
  rx << 1.0, 0.0, 0.0,
        0.0, std::cos(tilt), -std::sin(tilt),
        0.0, std::sin(tilt), std::cos(tilt);
  const Eigen::Matrix3d pose = rx * rz;

  PointCloudd cloud;
  cloud.points.resize(n_points, 3);
  for (int i = 0; i < n_points; ++i) {
    Eigen::RowVector3d p;
    switch (family) {
      case ShapeFamily::sphere_surface: p = sphere_sample(engine); break;
      case ShapeFamily::cube_surface: p = cube_sample(engine); break;
      default: p = disk_sample(engine); break;
    }
    p = scale * (p * pose.transpose());
    p += Eigen::RowVector3d(0.01 * engine.normal(), 0.01 * engine.normal(),
                            0.01 * engine.normal());
    cloud.points.row(i) = p;
  }
  return cloud;
}

LabeledDataset make_synthetic_dataset(int clouds_per_class, int n_points, uint64_t seed) {
  if (clouds_per_class < 1)
    throw std::invalid_argument("make_synthetic_dataset: clouds_per_class must be >= 1");
  const ShapeFamily families[3] = {ShapeFamily::sphere_surface, ShapeFamily::cube_surface,
                                   ShapeFamily::planar_disk};
  LabeledDataset dataset;
  dataset.split_name = "synthetic";
  dataset.class_names = {"sphere", "cube", "disk"};
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < clouds_per_class; ++i) {
      const uint64_t cloud_seed = rng::mix(seed, static_cast<uint64_t>(c) * 1000003u + i);
      PointCloudd cloud = make_shape_cloud(families[c], n_points, cloud_seed);
      cloud.label = c;
      dataset.clouds.push_back(cloud.cast<float>());
    }
  }
  return dataset;
}

}  // namespace pointgpe
