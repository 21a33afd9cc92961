#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pointgpe/encoder.hpp"

using namespace pointgpe;

namespace {

PointMatrix<double> from_rows(std::initializer_list<std::array<double, 3>> rows) {
  PointMatrix<double> m(static_cast<Eigen::Index>(rows.size()), 3);
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    m(r, 0) = row[0];
    m(r, 1) = row[1];
    m(r, 2) = row[2];
    ++r;
  }
  return m;
}

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.refs_per_axis = 4;
  cfg.sigma = 0.35;
  cfg.neighbors = 6;
  cfg.stages = 3;
  cfg.clamp_k = true;
  return cfg;
}

}  // namespace

TEST_CASE("reference grid endpoints and spacing") {
  const auto v2 = make_reference_grid(2);
  CHECK(v2[0] == -1.0);
  CHECK(v2[1] == 1.0);

  const auto v3 = make_reference_grid(3);
  CHECK(v3[0] == -1.0);
  CHECK(v3[1] == 0.0);
  CHECK(v3[2] == 1.0);

  const auto v1 = make_reference_grid(1);
  REQUIRE(v1.size() == 1);
  CHECK(v1[0] == 0.0);

  // arithmetic progression oracle for V = 9
  const auto v9 = make_reference_grid(9);
  for (int j = 0; j < 9; ++j) CHECK(v9[j] == doctest::Approx(-1.0 + 0.25 * j).epsilon(1e-15));

  CHECK_THROWS_AS(make_reference_grid(0), std::invalid_argument);
}

TEST_CASE("gpe_encode analytic values") {
  const auto refs = make_reference_grid(3);  // {-1, 0, 1}
  const auto coords = from_rows({{0.0, 1.0, -1.0}});
  const double sigma = 0.35;
  const auto enc = gpe_encode(coords, refs, sigma);
  REQUIRE(enc.cols() == 9);

  // coincidence with a reference gives exactly 1
  CHECK(enc(0, 3 * 1 + 0) == 1.0);  // x=0 vs v=0
  CHECK(enc(0, 3 * 2 + 1) == 1.0);  // y=1 vs v=1
  CHECK(enc(0, 3 * 0 + 2) == 1.0);  // z=-1 vs v=-1

  // |c - v| = sigma gives exp(-1/2)
  PointMatrix<double> at_sigma(1, 3);
  at_sigma << sigma, 0.0, 0.0;
  Eigen::VectorXd one_ref(1);
  one_ref << 0.0;
  const auto enc_sigma = gpe_encode(at_sigma, one_ref, sigma);
  CHECK(std::abs(enc_sigma(0, 0) - std::exp(-0.5)) < 1e-12);

  // frozen scalar value for c=0, v=1, sigma=0.35, plus the scalar oracle
  const auto enc_far = gpe_encode(from_rows({{0.0, 0.0, 0.0}}), make_reference_grid(2), 0.35);
  const double expected = std::exp(-std::pow(0.0 - 1.0, 2) / (2.0 * 0.35 * 0.35));
  CHECK(enc_far(0, 3 * 1 + 0) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(enc_far(0, 3 * 1 + 0) == doctest::Approx(0.016866).epsilon(1e-4));

  CHECK_THROWS_AS(gpe_encode(coords, refs, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gpe_encode(coords, refs, -0.1), std::invalid_argument);
}

TEST_CASE("gpe_encode column layout is reference-major (x,y,z) triples") {
  const auto coords = from_rows({{0.1, 0.5, 0.9}});
  Eigen::VectorXd refs(2);
  refs << 0.1, 0.9;
  const auto enc = gpe_encode(coords, refs, 0.35);
  // x matches ref 0 exactly, z matches ref 1 exactly
  CHECK(enc(0, 0) == 1.0);
  CHECK(enc(0, 5) == 1.0);
  CHECK(enc(0, 3) < 1.0);
}

TEST_CASE("gpe_encode entries lie in (0,1] and hit 1 only at coincidence") {
  rng::Engine engine(17);
  const auto refs = make_reference_grid(5);
  const auto coords = oracle::random_cloud(engine, 64);
  const auto enc = gpe_encode(coords, refs, 0.3);
  CHECK(enc.minCoeff() > 0.0);
  CHECK(enc.maxCoeff() <= 1.0);
  for (int i = 0; i < enc.rows(); ++i)
    for (int j = 0; j < enc.cols(); ++j)
      if (enc(i, j) == 1.0) CHECK(coords(i, j % 3) == refs[j / 3]);
}

TEST_CASE("gpe_encode is monotone in |c - v| and in sigma") {
  Eigen::VectorXd one_ref(1);
  one_ref << 0.0;
  double previous = 2.0;
  for (double c = 0.0; c <= 2.0; c += 0.05) {
    const auto enc = gpe_encode(from_rows({{c, 0.0, 0.0}}), one_ref, 0.35);
    CHECK(enc(0, 0) < previous + 1e-18);
    previous = enc(0, 0);
  }
  previous = 0.0;
  for (double sigma = 0.05; sigma <= 1.0; sigma += 0.05) {
    const auto enc = gpe_encode(from_rows({{0.7, 0.0, 0.0}}), one_ref, sigma);
    CHECK(enc(0, 0) > previous);
    previous = enc(0, 0);
  }
}

TEST_CASE("gpe_aggregate additive identity and reference coincidence") {
  const auto refs = make_reference_grid(2);
  const auto coords = from_rows({{-1.0, 1.0, -1.0}, {1.0, -1.0, 1.0}});
  const FeatureMatrix<double> zeros = FeatureMatrix<double>::Zero(2, 6);

  const auto agg = gpe_aggregate(zeros, coords, refs, 0.35, AggregationMode::additive_squared);
  const auto enc = gpe_encode(coords, refs, 0.35);
  CHECK((agg.array() - enc.array().square()).abs().maxCoeff() < 1e-15);

  // with a single reference at 0, coords at 0 give a response of 1 everywhere
  const auto one_ref = make_reference_grid(1);
  const FeatureMatrix<double> gamma_feats = FeatureMatrix<double>::Constant(2, 3, 0.25);
  const PointMatrix<double> at_ref = PointMatrix<double>::Zero(2, 3);
  const auto agg_ones =
      gpe_aggregate(gamma_feats, at_ref, one_ref, 0.35, AggregationMode::additive_squared);
  CHECK((agg_ones.array() - 1.25).abs().maxCoeff() < 1e-15);
}

TEST_CASE("gpe_aggregate matches an element-wise scalar loop") {
  rng::Engine engine(23);
  const auto refs = make_reference_grid(3);
  const auto coords = oracle::random_cloud(engine, 2);
  FeatureMatrix<double> feats(2, 9);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 9; ++j) feats(i, j) = engine.range(-1.0, 1.0);

  for (const auto mode : {AggregationMode::additive_squared, AggregationMode::multiplicative}) {
    const auto got = gpe_aggregate(feats, coords, refs, 0.4, mode);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 9; ++j) {
        const double c = coords(i, j % 3);
        const double v = refs[j / 3];
        const double g = std::exp(-(c - v) * (c - v) / (2.0 * 0.4 * 0.4));
        const double expected =
            mode == AggregationMode::additive_squared ? feats(i, j) + g * g : feats(i, j) * g;
        REQUIRE(std::abs(got(i, j) - expected) < 1e-14);
      }
    }
  }
}

TEST_CASE("gpe_aggregate rejects shape mismatches") {
  const auto refs = make_reference_grid(2);
  const auto coords = from_rows({{0, 0, 0}});
  const FeatureMatrix<double> wrong_dim = FeatureMatrix<double>::Zero(1, 5);
  CHECK_THROWS_AS(gpe_aggregate(wrong_dim, coords, refs, 0.35,
                                AggregationMode::additive_squared),
                  std::invalid_argument);
  const FeatureMatrix<double> wrong_rows = FeatureMatrix<double>::Zero(2, 6);
  CHECK_THROWS_AS(gpe_aggregate(wrong_rows, coords, refs, 0.35,
                                AggregationMode::additive_squared),
                  std::invalid_argument);
}

TEST_CASE("neighbor_pool mean plus max") {
  FeatureMatrix<double> one_row(1, 3);
  one_row << 0.5, -1.0, 2.0;
  const auto pooled_one = neighbor_pool(one_row);
  CHECK(pooled_one(0) == doctest::Approx(1.0));
  CHECK(pooled_one(1) == doctest::Approx(-2.0));
  CHECK(pooled_one(2) == doctest::Approx(4.0));

  FeatureMatrix<double> two_rows(2, 1);
  two_rows << 0.0, 1.0;
  CHECK(neighbor_pool(two_rows)(0) == doctest::Approx(1.5));

  const FeatureMatrix<double> same = FeatureMatrix<double>::Constant(5, 4, 0.75);
  CHECK((neighbor_pool(same).array() - 1.5).abs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(neighbor_pool(FeatureMatrix<double>(0, 3)), std::invalid_argument);
}

TEST_CASE("neighbor_pool is invariant to row permutation") {
  rng::Engine engine(31);
  FeatureMatrix<double> feats(8, 5);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 5; ++j) feats(i, j) = engine.range(-3.0, 3.0);
  FeatureMatrix<double> reversed = feats.colwise().reverse();
  // max is exactly order-free; the mean only up to summation reassociation
  CHECK((neighbor_pool(feats) - neighbor_pool(reversed)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("encode_stage halves the point count and keeps D") {
  rng::Engine engine(37);
  EncoderConfig cfg;  // defaults: V=9, K=120, S=4
  StageState<double> state;
  state.coords = oracle::random_cloud(engine, 1024);
  state.feats = gpe_encode(state.coords, make_reference_grid(cfg.refs_per_axis), cfg.sigma);
  const auto next = encode_stage(state, cfg);
  CHECK(next.coords.rows() == 512);
  CHECK(next.feats.rows() == 512);
  CHECK(next.feats.cols() == 27);
  CHECK(next.stage_index == 1);
  CHECK(next.feats.allFinite());

  // the carried-forward coordinates are the centers' original ones
  const auto centers = fps(state.coords, 512);
  for (int c = 0; c < 16; ++c)
    CHECK((next.coords.row(c).array() == state.coords.row(centers[c]).array()).all());
}

TEST_CASE("encode_stage minimal case: two points with clamped K") {
  EncoderConfig cfg = small_config();
  StageState<double> state;
  state.coords = from_rows({{0, 0, 0}, {1, 0, 0}});
  state.feats = gpe_encode(state.coords, make_reference_grid(cfg.refs_per_axis), cfg.sigma);
  const auto next = encode_stage(state, cfg);
  CHECK(next.coords.rows() == 1);
  CHECK(next.feats.allFinite());

  cfg.clamp_k = false;
  cfg.neighbors = 6;
  CHECK_THROWS_AS(encode_stage(state, cfg), std::invalid_argument);
}

TEST_CASE("encode produces stages * 3 * refs_per_axis values") {
  rng::Engine engine(43);
  const PointCloudd cloud{oracle::random_cloud(engine, 64), 3};
  EncoderConfig cfg;
  cfg.clamp_k = true;
  const auto feature = encode(cloud, cfg);
  CHECK(feature.values.size() == 4 * 27);
  CHECK(feature.source_label == 3);
  CHECK(feature.values.allFinite());
  CHECK(feature.values.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("encode names the minimum point count when the cloud is too small") {
  EncoderConfig cfg = small_config();  // 3 stages -> needs 8 points
  PointCloudd cloud{from_rows({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}), std::nullopt};
  try {
    encode(cloud, cfg);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("8") != std::string::npos);
  }
}

TEST_CASE("encode is invariant to translation and uniform scale") {
  rng::Engine engine(47);
  EncoderConfig cfg = small_config();
  const auto pts = oracle::random_cloud(engine, 40);
  const PointCloudd cloud{pts, std::nullopt};
  const auto base = encode(cloud, cfg);

  PointCloudd moved;
  moved.points = (pts * 2.5).rowwise() + Eigen::RowVector3d(10.0, -4.0, 7.0);
  const auto transformed = encode(moved, cfg);
  CHECK((base.values - transformed.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("encode is invariant to point permutation on generic clouds") {
  rng::Engine engine(53);
  EncoderConfig cfg = small_config();
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 24 + static_cast<int>(engine.bounded(40));
    const auto pts = oracle::random_cloud(engine, n);
    const PointCloudd cloud{pts, std::nullopt};
    const auto base = encode(cloud, cfg);

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    engine.shuffle(order);
    PointCloudd permuted;
    permuted.points.resize(n, 3);
    for (int i = 0; i < n; ++i) permuted.points.row(i) = pts.row(order[i]);
    const auto shuffled = encode(permuted, cfg);
    CHECK((base.values - shuffled.values).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("encode is sensitive to rotation") {
  rng::Engine engine(59);
  EncoderConfig cfg = small_config();
  const auto pts = oracle::random_cloud(engine, 48);
  const auto base = encode(PointCloudd{pts, std::nullopt}, cfg);

  Eigen::Matrix3d rot90;
  rot90 << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  PointCloudd rotated;
  rotated.points = pts * rot90.transpose();
  const auto turned = encode(rotated, cfg);
  CHECK((base.values - turned.values).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("per-stage sigma override changes only the staged aggregation") {
  rng::Engine engine(61);
  EncoderConfig cfg = small_config();
  const PointCloudd cloud{oracle::random_cloud(engine, 32), std::nullopt};
  const auto base = encode(cloud, cfg);

  EncoderConfig overridden = cfg;
  overridden.stage_sigma = {cfg.sigma, cfg.sigma, cfg.sigma};
  const auto same = encode(cloud, overridden);
  CHECK((base.values - same.values).cwiseAbs().maxCoeff() == 0.0);

  overridden.stage_sigma = {0.2, 0.3, 0.5};
  const auto changed = encode(cloud, overridden);
  CHECK((base.values - changed.values).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("encoder instantiates for float scalars too") {
  rng::Engine engine(67);
  EncoderConfig cfg = small_config();
  PointCloud<float> cloud{oracle::random_cloud(engine, 32).cast<float>(), 1};
  const auto feature = encode(cloud, cfg);
  CHECK(feature.values.size() == cfg.global_dim());
  CHECK(feature.values.allFinite());
  CHECK(std::abs(feature.values.norm() - 1.0f) < 1e-5f);
}

TEST_CASE("config validation and fingerprints") {
  EncoderConfig cfg;
  CHECK(cfg.refs_per_axis == 9);
  CHECK(cfg.sigma == 0.35);
  CHECK(cfg.neighbors == 120);
  CHECK(cfg.stages == 4);
  CHECK(cfg.feature_dim() == 27);
  CHECK(cfg.global_dim() == 108);
  cfg.validate();

  EncoderConfig bad = cfg;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.stages = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.stage_sigma = {0.1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  EncoderConfig other = cfg;
  CHECK(other.fingerprint() == cfg.fingerprint());
  other.sigma = 0.3;
  CHECK(other.fingerprint() != cfg.fingerprint());

  CHECK(aggregation_mode_from_string("paper-literal") == AggregationMode::additive_squared);
  CHECK(aggregation_mode_from_string("multiplicative") == AggregationMode::multiplicative);
  CHECK_THROWS_AS(aggregation_mode_from_string("bogus"), std::invalid_argument);
  CHECK(to_string(GroupStdMode::per_dimension) == "per-dimension");
}
