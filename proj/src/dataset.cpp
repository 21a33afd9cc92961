#include "pointgpe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "pointgpe/hdf5_io.hpp"

namespace pointgpe {

namespace fs = std::filesystem;

namespace {

constexpr int kMinPointsPerCloud = 1024;

std::vector<std::string> find_files(const std::string& dir,
                                    const std::function<bool(const fs::path&)>& keep) {
  std::vector<std::string> found;
  std::error_code ec;
  fs::recursive_directory_iterator it(dir, fs::directory_options::skip_permission_denied, ec);
  if (ec) return found;
  for (const auto& entry : it) {
    if (entry.is_regular_file() && keep(entry.path())) found.push_back(entry.path().string());
  }
  std::sort(found.begin(), found.end());
  return found;
}

void append_file(LabeledDataset& dataset, const std::string& path) {
  const h5::PointsFile contents = h5::read_points_file(path);
  for (size_t b = 0; b < contents.clouds.size(); ++b) {
    if (contents.clouds[b].rows() < kMinPointsPerCloud)
      throw io_error(path + ": cloud " + std::to_string(b) + " has " +
                     std::to_string(contents.clouds[b].rows()) + " points, need at least " +
                     std::to_string(kMinPointsPerCloud));
    const long long label = contents.labels[b];
    if (label < 0)
      throw io_error(path + ": negative label " + std::to_string(label));
    PointCloudf cloud;
    cloud.points = contents.clouds[b];
    cloud.label = static_cast<int>(label);
    dataset.clouds.push_back(std::move(cloud));
  }
}

std::vector<std::string> generic_class_names(int num_classes) {
  std::vector<std::string> names(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "class_%02d", c);
    names[c] = buf;
  }
  return names;
}

void finalize_labels(LabeledDataset& dataset, std::vector<std::string> class_names,
                     const std::string& origin) {
  int max_label = -1;
  for (const auto& cloud : dataset.clouds) max_label = std::max(max_label, cloud.label.value());
  if (class_names.empty()) class_names = generic_class_names(max_label + 1);
  if (max_label >= static_cast<int>(class_names.size()))
    throw io_error(origin + ": label " + std::to_string(max_label) +
                   " exceeds class count " + std::to_string(class_names.size()));
  dataset.class_names = std::move(class_names);
}

std::vector<std::string> read_name_file(const std::string& path) {
  std::vector<std::string> names;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> load_modelnet40(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw io_error(dir + ": dataset directory not found. Download the ModelNet40 HDF5 archive "
                         "(modelnet40_ply_hdf5_2048.zip) and unpack it there.");
  const auto is_h5 = [](const fs::path& p) { return p.extension() == ".h5"; };
  const auto train_files = find_files(dir, [&](const fs::path& p) {
    return is_h5(p) && p.filename().string().find("train") != std::string::npos;
  });
  const auto test_files = find_files(dir, [&](const fs::path& p) {
    return is_h5(p) && p.filename().string().find("test") != std::string::npos;
  });
  if (train_files.empty() || test_files.empty())
    throw io_error(dir + ": expected ply_data_train*.h5 and ply_data_test*.h5 files "
                         "(standard ModelNet40 HDF5 distribution)");

  std::vector<std::string> class_names;
  const auto name_files = find_files(dir, [](const fs::path& p) {
    return p.filename() == "shape_names.txt";
  });
  if (!name_files.empty()) class_names = read_name_file(name_files.front());

  LabeledDataset train;
  train.split_name = "modelnet40/train";
  for (const auto& path : train_files) append_file(train, path);
  LabeledDataset test;
  test.split_name = "modelnet40/test";
  for (const auto& path : test_files) append_file(test, path);

  finalize_labels(train, class_names, dir);
  finalize_labels(test, train.class_names, dir);
  return {std::move(train), std::move(test)};
}

std::pair<LabeledDataset, LabeledDataset> load_scanobjectnn(const std::string& dir,
                                                            const std::string& split) {
  std::string train_name, test_name;
  bool want_nobg = false;
  if (split == "OBJ-BG" || split == "OBJ-ONLY") {
    train_name = "training_objectdataset.h5";
    test_name = "test_objectdataset.h5";
    want_nobg = (split == "OBJ-ONLY");
  } else if (split == "PB-T50-RS") {
    train_name = "training_objectdataset_augmentedrot_scale75.h5";
    test_name = "test_objectdataset_augmentedrot_scale75.h5";
  } else {
    throw std::invalid_argument("load_scanobjectnn: unknown split '" + split +
                                "' (expected OBJ-BG, OBJ-ONLY or PB-T50-RS)");
  }
  if (!fs::is_directory(dir))
    throw io_error(dir + ": dataset directory not found. Request the ScanObjectNN h5_files "
                         "archive from the dataset authors and unpack it there.");

  const auto locate = [&](const std::string& name) -> std::string {
    auto candidates = find_files(dir, [&](const fs::path& p) { return p.filename() == name; });
    if (split != "PB-T50-RS") {
      std::vector<std::string> filtered;
      for (const auto& c : candidates)
        if ((c.find("nobg") != std::string::npos) == want_nobg) filtered.push_back(c);
      if (!filtered.empty())
        candidates = filtered;
      else if (candidates.size() != 1)
        candidates.clear();
    }
    if (candidates.empty())
      throw io_error(dir + ": cannot locate " + name + " for split " + split +
                     " (expected the official h5_files layout, e.g. main_split/ and "
                     "main_split_nobg/)");
    return candidates.front();
  };

  LabeledDataset train;
  train.split_name = "scanobjectnn/" + split + "/train";
  append_file(train, locate(train_name));
  LabeledDataset test;
  test.split_name = "scanobjectnn/" + split + "/test";
  append_file(test, locate(test_name));

  finalize_labels(train, {}, dir);
  finalize_labels(test, train.class_names, dir);
  return {std::move(train), std::move(test)};
}

std::string to_string(SampleStrategy strategy) {
  return strategy == SampleStrategy::first_n ? "first-n" : "random";
}

SampleStrategy sample_strategy_from_string(const std::string& name) {
  if (name == "first-n") return SampleStrategy::first_n;
  if (name == "random") return SampleStrategy::random;
  throw std::invalid_argument("unknown sample strategy '" + name +
                              "' (expected first-n or random)");
}

PointCloudd load_xyz_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  std::vector<Eigen::RowVector3d> rows;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    std::istringstream fields(line);
    double x, y, z;
    if (!(fields >> x >> y >> z))
      throw io_error(path + ":" + std::to_string(line_number) + ": expected 'x y z'");
    std::string extra;
    if (fields >> extra)
      throw io_error(path + ":" + std::to_string(line_number) + ": trailing content '" + extra +
                     "'");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
      throw io_error(path + ":" + std::to_string(line_number) + ": non-finite coordinate");
    rows.emplace_back(x, y, z);
  }
  if (rows.empty()) throw io_error(path + ": no points found");
  PointCloudd cloud;
  cloud.points.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (size_t i = 0; i < rows.size(); ++i) cloud.points.row(static_cast<Eigen::Index>(i)) = rows[i];
  return cloud;
}

std::vector<FewShotEpisode> make_fewshot_episodes(const LabeledDataset& dataset, int way,
                                                  int shot, int queries_per_class, int runs,
                                                  uint64_t seed) {
  const int c = dataset.num_classes();
  if (way < 1 || way > c)
    throw std::invalid_argument("make_fewshot_episodes: way=" + std::to_string(way) +
                                " outside [1, " + std::to_string(c) + "]");
  if (shot < 1 || queries_per_class < 1 || runs < 1)
    throw std::invalid_argument("make_fewshot_episodes: shot, queries and runs must be >= 1");

  std::vector<std::vector<int>> by_class(c);
  for (int i = 0; i < dataset.size(); ++i)
    by_class[dataset.clouds[i].label.value()].push_back(i);

  std::vector<FewShotEpisode> episodes;
  episodes.reserve(runs);
  for (int run = 0; run < runs; ++run) {
    rng::Engine engine(rng::mix(seed, static_cast<uint64_t>(run)));
    FewShotEpisode episode;
    episode.way = way;
    episode.shot = shot;
    episode.queries_per_class = queries_per_class;
    episode.seed = seed;

    std::vector<int> classes(c);
    for (int i = 0; i < c; ++i) classes[i] = i;
    engine.shuffle(classes);
    classes.resize(way);
    episode.class_ids = classes;

    for (int e = 0; e < way; ++e) {
      const int cls = classes[e];
      std::vector<int> members = by_class[cls];
      if (static_cast<int>(members.size()) < shot + queries_per_class)
        throw std::invalid_argument("make_fewshot_episodes: class '" +
                                    dataset.class_names[cls] + "' has " +
                                    std::to_string(members.size()) + " samples, need " +
                                    std::to_string(shot + queries_per_class));
      engine.shuffle(members);
      for (int s = 0; s < shot; ++s) episode.support.emplace_back(members[s], e);
      for (int q = 0; q < queries_per_class; ++q)
        episode.query.emplace_back(members[shot + q], e);
    }
    episodes.push_back(std::move(episode));
  }
  return episodes;
}

}  // namespace pointgpe
