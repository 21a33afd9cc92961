#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pointgpe/rng.hpp"
#include "pointgpe/types.hpp"

namespace pointgpe {

/// Labeled cloud collection for one split. Every cloud carries a label in
/// [0, num_classes()).
struct LabeledDataset {
  std::vector<PointCloudf> clouds;
  std::vector<std::string> class_names;
  std::string split_name;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  int size() const { return static_cast<int>(clouds.size()); }
};

/// Loads the standard ModelNet40 HDF5 distribution from dir: every *train*.h5
/// file feeds the train split, every *test*.h5 the test split, in sorted
/// order. Class names come from shape_names.txt when present.
std::pair<LabeledDataset, LabeledDataset> load_modelnet40(const std::string& dir);

/// Loads one official ScanObjectNN split ("OBJ-BG", "OBJ-ONLY" or
/// "PB-T50-RS") from the official HDF5 files found under dir.
std::pair<LabeledDataset, LabeledDataset> load_scanobjectnn(const std::string& dir,
                                                            const std::string& split);

enum class SampleStrategy { first_n, random };

std::string to_string(SampleStrategy strategy);
SampleStrategy sample_strategy_from_string(const std::string& name);

/// Keeps n of the cloud's points: the first n rows, or n distinct rows drawn
/// with the given seed. Label is preserved.
template <typename Scalar>
PointCloud<Scalar> sample_points(const PointCloud<Scalar>& cloud, int n, SampleStrategy strategy,
                                 uint64_t seed) {
  const int total = static_cast<int>(cloud.points.rows());
  if (n < 1 || n > total)
    throw std::invalid_argument("sample_points: n=" + std::to_string(n) +
                                " outside [1, " + std::to_string(total) + "]");
  PointCloud<Scalar> out;
  out.label = cloud.label;
  if (strategy == SampleStrategy::first_n) {
    out.points = cloud.points.topRows(n);
    return out;
  }
  std::vector<int> order(total);
  for (int i = 0; i < total; ++i) order[i] = i;
  rng::Engine engine(seed);
  for (int i = 0; i < n; ++i) {
    const int j = i + static_cast<int>(engine.bounded(static_cast<uint64_t>(total - i)));
    std::swap(order[i], order[j]);
  }
  out.points.resize(n, 3);
  for (int i = 0; i < n; ++i) out.points.row(i) = cloud.points.row(order[i]);
  return out;
}

/// Parses a whitespace-separated "x y z" text file, one point per line.
/// Blank lines and lines starting with '#' are ignored; anything else that is
/// not exactly three finite numbers raises io_error with the line number.
PointCloudd load_xyz_text(const std::string& path);

/// One N-way K-shot episode: disjoint support and query (cloud index,
/// episode-class) pairs over `way` classes sampled without replacement.
struct FewShotEpisode {
  int way = 0;
  int shot = 0;
  int queries_per_class = 0;
  uint64_t seed = 0;
  std::vector<int> class_ids;                 // way original class indices
  std::vector<std::pair<int, int>> support;   // way*shot entries
  std::vector<std::pair<int, int>> query;     // way*queries_per_class entries
};

/// Builds `runs` reproducible episodes; run r is driven by a generator seeded
/// from (seed, r), so fixed inputs give identical episodes everywhere.
std::vector<FewShotEpisode> make_fewshot_episodes(const LabeledDataset& dataset, int way,
                                                  int shot, int queries_per_class, int runs,
                                                  uint64_t seed);

}  // namespace pointgpe
