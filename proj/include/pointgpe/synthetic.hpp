#pragma once

#include <cstdint>

#include "pointgpe/dataset.hpp"
#include "pointgpe/types.hpp"

namespace pointgpe {

/// Shape families used by fixtures and the synthetic benchmark path.
enum class ShapeFamily { sphere_surface, cube_surface, planar_disk };

/// One randomly posed instance of a family: unit-scale surface samples with a
/// random rotation about z, a mild tilt, a random uniform scale, and small
/// Gaussian jitter. Deterministic in the seed.
PointCloudd make_shape_cloud(ShapeFamily family, int n_points, uint64_t seed);

/// Three-class dataset (sphere / cube / disk) with clouds_per_class instances
/// per family.
LabeledDataset make_synthetic_dataset(int clouds_per_class, int n_points, uint64_t seed);

}  // namespace pointgpe
