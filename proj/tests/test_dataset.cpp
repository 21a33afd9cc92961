#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "pointgpe/dataset.hpp"
#include "pointgpe/hdf5_io.hpp"

using namespace pointgpe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<PointMatrix<float>> random_float_clouds(rng::Engine& engine, int count, int points) {
  std::vector<PointMatrix<float>> clouds;
  for (int b = 0; b < count; ++b) {
    PointMatrix<float> cloud(points, 3);
    for (int i = 0; i < points; ++i)
      for (int c = 0; c < 3; ++c) cloud(i, c) = static_cast<float>(engine.range(-1.0, 1.0));
    clouds.push_back(std::move(cloud));
  }
  return clouds;
}

}  // namespace

TEST_CASE("hdf5 points file round-trips bit-exactly") {
  TempDir dir("pointgpe_h5_roundtrip");
  rng::Engine engine(11);
  const auto clouds = random_float_clouds(engine, 4, 1024);
  const std::vector<long long> labels = {0, 2, 1, 2};
  const std::string path = (dir.path / "mini.h5").string();
  h5::write_points_file(path, clouds, labels);

  const auto loaded = h5::read_points_file(path);
  REQUIRE(loaded.clouds.size() == 4);
  CHECK(loaded.labels == labels);
  for (int b = 0; b < 4; ++b)
    CHECK((loaded.clouds[b].array() == clouds[b].array()).all());

  // rank-1 labels read the same way
  const std::string path1 = (dir.path / "mini_rank1.h5").string();
  h5::write_points_file(path1, clouds, labels, /*label_rank2=*/false);
  CHECK(h5::read_points_file(path1).labels == labels);
}

TEST_CASE("hdf5 reader names the offending file on errors") {
  TempDir dir("pointgpe_h5_errors");
  const std::string missing = (dir.path / "missing.h5").string();
  CHECK_THROWS_WITH_AS(h5::read_points_file(missing),
                       doctest::Contains("missing.h5"), io_error);

  const std::string garbage = (dir.path / "garbage.h5").string();
  {
    std::ofstream out(garbage);
    out << "not an hdf5 file";
  }
  CHECK_THROWS_AS(h5::read_points_file(garbage), io_error);

  // a truncated archive fails with the file named, not silently
  rng::Engine engine(7);
  const std::string truncated = (dir.path / "truncated.h5").string();
  h5::write_points_file(truncated, random_float_clouds(engine, 3, 1024), {0, 1, 2});
  fs::resize_file(truncated, fs::file_size(truncated) / 2);
  CHECK_THROWS_WITH_AS(h5::read_points_file(truncated), doctest::Contains("truncated.h5"),
                       io_error);
}

TEST_CASE("load_modelnet40 reads synthetic mini archives") {
  TempDir dir("pointgpe_mn40_mini");
  rng::Engine engine(13);
  const auto train_clouds = random_float_clouds(engine, 4, 1024);
  const auto test_clouds = random_float_clouds(engine, 2, 1024);
  h5::write_points_file((dir.path / "ply_data_train0.h5").string(), train_clouds, {0, 1, 2, 1});
  h5::write_points_file((dir.path / "ply_data_test0.h5").string(), test_clouds, {2, 0});
  {
    std::ofstream names(dir.path / "shape_names.txt");
    names << "airplane\nbathtub\nbed\n";
  }

  const auto [train, test] = load_modelnet40(dir.path.string());
  CHECK(train.size() == 4);
  CHECK(test.size() == 2);
  CHECK(train.num_classes() == 3);
  CHECK(train.class_names[0] == "airplane");
  CHECK(test.split_name == "modelnet40/test");
  CHECK((train.clouds[1].points.array() == train_clouds[1].array()).all());
  CHECK(train.clouds[3].label == 1);
}

TEST_CASE("load_modelnet40 rejects short clouds and missing directories") {
  TempDir dir("pointgpe_mn40_bad");
  rng::Engine engine(17);
  h5::write_points_file((dir.path / "ply_data_train0.h5").string(),
                        random_float_clouds(engine, 2, 512), {0, 1});
  h5::write_points_file((dir.path / "ply_data_test0.h5").string(),
                        random_float_clouds(engine, 1, 1024), {0});
  CHECK_THROWS_WITH_AS(load_modelnet40(dir.path.string()),
                       doctest::Contains("ply_data_train0.h5"), io_error);

  CHECK_THROWS_AS(load_modelnet40((dir.path / "nope").string()), io_error);

  TempDir empty("pointgpe_mn40_empty");
  CHECK_THROWS_AS(load_modelnet40(empty.path.string()), io_error);
}

TEST_CASE("load_scanobjectnn resolves splits from the official layout") {
  TempDir dir("pointgpe_sonn_mini");
  rng::Engine engine(19);
  fs::create_directories(dir.path / "main_split");
  fs::create_directories(dir.path / "main_split_nobg");

  h5::write_points_file((dir.path / "main_split" / "training_objectdataset.h5").string(),
                        random_float_clouds(engine, 3, 1024), {0, 1, 1}, false);
  h5::write_points_file((dir.path / "main_split" / "test_objectdataset.h5").string(),
                        random_float_clouds(engine, 2, 1024), {1, 0}, false);
  h5::write_points_file(
      (dir.path / "main_split_nobg" / "training_objectdataset.h5").string(),
      random_float_clouds(engine, 2, 1024), {0, 1}, false);
  h5::write_points_file((dir.path / "main_split_nobg" / "test_objectdataset.h5").string(),
                        random_float_clouds(engine, 1, 1024), {0}, false);
  h5::write_points_file(
      (dir.path / "main_split" / "training_objectdataset_augmentedrot_scale75.h5").string(),
      random_float_clouds(engine, 4, 1024), {0, 1, 2, 2}, false);
  h5::write_points_file(
      (dir.path / "main_split" / "test_objectdataset_augmentedrot_scale75.h5").string(),
      random_float_clouds(engine, 2, 1024), {2, 1}, false);

  const auto [bg_train, bg_test] = load_scanobjectnn(dir.path.string(), "OBJ-BG");
  CHECK(bg_train.size() == 3);
  CHECK(bg_test.size() == 2);

  const auto [only_train, only_test] = load_scanobjectnn(dir.path.string(), "OBJ-ONLY");
  CHECK(only_train.size() == 2);
  CHECK(only_test.size() == 1);

  const auto [pb_train, pb_test] = load_scanobjectnn(dir.path.string(), "PB-T50-RS");
  CHECK(pb_train.size() == 4);
  CHECK(pb_train.num_classes() == 3);
  CHECK(pb_test.split_name == "scanobjectnn/PB-T50-RS/test");

  CHECK_THROWS_AS(load_scanobjectnn(dir.path.string(), "bogus"), std::invalid_argument);
}

TEST_CASE("sample_points strategies") {
  rng::Engine engine(23);
  PointCloudd cloud{oracle::random_cloud(engine, 5), 4};

  const auto first = sample_points(cloud, 2, SampleStrategy::first_n, 0);
  CHECK(first.points.rows() == 2);
  CHECK((first.points.array() == cloud.points.topRows(2).array()).all());
  CHECK(first.label == 4);

  const auto all_first = sample_points(cloud, 5, SampleStrategy::first_n, 0);
  CHECK((all_first.points.array() == cloud.points.array()).all());

  const auto all_random = sample_points(cloud, 5, SampleStrategy::random, 7);
  std::set<double> original, drawn;
  for (int i = 0; i < 5; ++i) {
    original.insert(cloud.points(i, 0));
    drawn.insert(all_random.points(i, 0));
  }
  CHECK(original == drawn);

  const auto draw_a = sample_points(cloud, 3, SampleStrategy::random, 42);
  const auto draw_b = sample_points(cloud, 3, SampleStrategy::random, 42);
  CHECK((draw_a.points.array() == draw_b.points.array()).all());
  const auto draw_c = sample_points(cloud, 3, SampleStrategy::random, 43);
  CHECK(!((draw_c.points.array() == draw_a.points.array()).all()));

  CHECK_THROWS_AS(sample_points(cloud, 6, SampleStrategy::first_n, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_points(cloud, 0, SampleStrategy::random, 0), std::invalid_argument);

  CHECK(sample_strategy_from_string("first-n") == SampleStrategy::first_n);
  CHECK(sample_strategy_from_string("random") == SampleStrategy::random);
  CHECK_THROWS_AS(sample_strategy_from_string("odd"), std::invalid_argument);
}

TEST_CASE("load_xyz_text parses points, comments and blank lines") {
  TempDir dir("pointgpe_xyz");
  const std::string path = (dir.path / "cloud.xyz").string();
  {
    std::ofstream out(path);
    out << "0 0 0\n1 0 0\n";
  }
  CHECK(load_xyz_text(path).points.rows() == 2);

  {
    std::ofstream out(path);
    out << "# comment\n\n  \n0 0 1\n";
  }
  const auto cloud = load_xyz_text(path);
  REQUIRE(cloud.points.rows() == 1);
  CHECK(cloud.points(0, 2) == 1.0);

  {
    std::ofstream out(path);
    out << "0 0\n";
  }
  CHECK_THROWS_WITH_AS(load_xyz_text(path), doctest::Contains(":1:"), io_error);

  {
    std::ofstream out(path);
    out << "0 0 0\n1 2 3 4\n";
  }
  CHECK_THROWS_WITH_AS(load_xyz_text(path), doctest::Contains(":2:"), io_error);
}

TEST_CASE("few-shot episodes have the right shape and are disjoint") {
  rng::Engine engine(29);
  LabeledDataset dataset;
  dataset.split_name = "fixture";
  for (int c = 0; c < 6; ++c) dataset.class_names.push_back("class_" + std::to_string(c));
  for (int c = 0; c < 6; ++c) {
    for (int i = 0; i < 40; ++i) {
      PointCloudf cloud;
      cloud.points = oracle::random_cloud(engine, 8).cast<float>();
      cloud.label = c;
      dataset.clouds.push_back(std::move(cloud));
    }
  }

  const auto episodes = make_fewshot_episodes(dataset, 5, 10, 20, 10, 123);
  REQUIRE(episodes.size() == 10);
  for (const auto& episode : episodes) {
    CHECK(episode.support.size() == 50);
    CHECK(episode.query.size() == 100);
    CHECK(std::set<int>(episode.class_ids.begin(), episode.class_ids.end()).size() == 5);

    std::set<int> support_set, query_set;
    std::vector<int> support_per_class(5, 0), query_per_class(5, 0);
    for (const auto& [idx, cls] : episode.support) {
      support_set.insert(idx);
      support_per_class[cls]++;
      CHECK(dataset.clouds[idx].label.value() == episode.class_ids[cls]);
    }
    for (const auto& [idx, cls] : episode.query) {
      query_set.insert(idx);
      query_per_class[cls]++;
      CHECK(dataset.clouds[idx].label.value() == episode.class_ids[cls]);
    }
    CHECK(support_set.size() == 50);
    CHECK(query_set.size() == 100);
    for (const int idx : support_set) CHECK(query_set.count(idx) == 0);
    for (int c = 0; c < 5; ++c) {
      CHECK(support_per_class[c] == 10);
      CHECK(query_per_class[c] == 20);
    }
  }

  // full-way degenerate episode is valid
  const auto full = make_fewshot_episodes(dataset, 6, 10, 20, 1, 9);
  CHECK(full[0].support.size() == 60);

  // same seed gives identical episodes, different seed differs
  const auto again = make_fewshot_episodes(dataset, 5, 10, 20, 10, 123);
  for (size_t e = 0; e < episodes.size(); ++e) {
    CHECK(episodes[e].support == again[e].support);
    CHECK(episodes[e].query == again[e].query);
    CHECK(episodes[e].class_ids == again[e].class_ids);
  }
  const auto other = make_fewshot_episodes(dataset, 5, 10, 20, 10, 124);
  bool any_differs = false;
  for (size_t e = 0; e < episodes.size(); ++e)
    if (episodes[e].support != other[e].support) any_differs = true;
  CHECK(any_differs);
}

TEST_CASE("few-shot episodes name the class that is too small") {
  rng::Engine engine(31);
  LabeledDataset dataset;
  dataset.class_names = {"big", "tiny"};
  for (int i = 0; i < 30; ++i) {
    PointCloudf cloud;
    cloud.points = oracle::random_cloud(engine, 8).cast<float>();
    cloud.label = 0;
    dataset.clouds.push_back(std::move(cloud));
  }
  for (int i = 0; i < 3; ++i) {
    PointCloudf cloud;
    cloud.points = oracle::random_cloud(engine, 8).cast<float>();
    cloud.label = 1;
    dataset.clouds.push_back(std::move(cloud));
  }
  CHECK_THROWS_WITH_AS(make_fewshot_episodes(dataset, 2, 5, 5, 3, 1),
                       doctest::Contains("tiny"), std::invalid_argument);
  CHECK_THROWS_AS(make_fewshot_episodes(dataset, 3, 1, 1, 1, 1), std::invalid_argument);
}
