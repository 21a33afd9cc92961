#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pointgpe/classifier.hpp"
#include "pointgpe/dataset.hpp"
#include "pointgpe/encoder.hpp"
#include "pointgpe/types.hpp"

namespace pointgpe {

/// 0 -> hardware concurrency (at least 1).
int resolve_threads(int requested);

/// Runs body(i) for i in [0, n) on the given number of threads. Work items
/// must be independent; callers keep determinism by writing results into
/// index i of a preallocated container. Exceptions are rethrown on the
/// calling thread.
void parallel_for(int64_t n, int threads, const std::function<void(int64_t)>& body);

/// Encodes every cloud (parallel across clouds), preserving input order.
std::vector<GlobalFeature<double>> encode_dataset(const std::vector<PointCloudf>& clouds,
                                                  const EncoderConfig& config, int threads);

struct EvalOptions {
  double gamma_scale = 100.0;
  int threads = 0;
};

struct EvalReport {
  double overall_accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // C entries; classes absent from the split report 0
  std::vector<int> per_class_count;
  Eigen::MatrixXi confusion;  // C x C, rows = true class, cols = predicted
  double wall_time_s = 0.0;
  double throughput = 0.0;  // samples / second, end to end
  double encode_time_s = 0.0;
  double classify_time_s = 0.0;
  int threads = 1;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<int> truth;
  std::vector<int> predictions;
  std::vector<double> top_similarities;
};

/// Encodes and classifies every labeled test cloud against the bank.
/// Deterministic for fixed inputs; the thread count only affects timing.
EvalReport evaluate(const FeatureBank& bank, const std::vector<PointCloudf>& test_clouds,
                    const EncoderConfig& config, const EvalOptions& options);

struct FewShotResult {
  std::vector<double> per_run_accuracy;
  std::vector<double> per_run_gamma;
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;
};

/// Runs the episode protocol: per episode, a bank is built from the support
/// clouds and every query cloud is classified against it. gamma_scale is
/// fixed, or selected per episode by leave-one-out on the support bank when
/// loo_gamma is set.
FewShotResult run_fewshot(const LabeledDataset& dataset, const EncoderConfig& config, int way,
                          int shot, int queries_per_class, int runs, uint64_t seed,
                          double gamma_scale, bool loo_gamma, int threads);

enum class SweepAxis { k, dimension, stages, sigma };

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

/// One evaluated configuration of a sweep.
struct SweepRow {
  double axis_value = 0.0;
  int refs_per_axis = 0;
  double sigma = 0.0;
  int k = 0;
  int stages = 0;
  std::string agg_mode;
  double gamma = 0.0;
  double accuracy = 0.0;
};

struct SweepGrid {
  std::string axis;
  std::vector<SweepRow> rows;
};

struct SweepValueSummary {
  double value = 0.0;
  double best = 0.0;
  double average = 0.0;
  int count = 0;
};

/// Best and average accuracy per main-axis value, in first-seen value order.
std::vector<SweepValueSummary> summarize_sweep(const SweepGrid& grid);

/// Co-swept axis values; empty lists fall back to the base config's value.
struct SweepCoGrid {
  std::vector<int> k;
  std::vector<int> dimension;  // D = 3*V, must be divisible by 3
  std::vector<int> stages;
  std::vector<double> sigma;
  std::vector<double> gamma;
  std::vector<AggregationMode> agg_modes;
};

/// Evaluates every (main value, co-grid) configuration, rebuilding the bank
/// whenever encoder parameters change; gamma variations reuse the encoded
/// features. One SweepRow per evaluated configuration.
SweepGrid run_sweep(const std::vector<PointCloudf>& train_clouds,
                    const std::vector<PointCloudf>& test_clouds, const EncoderConfig& base,
                    double base_gamma, SweepAxis axis, const std::vector<double>& values,
                    const SweepCoGrid& co, int threads);

struct BenchReport {
  int repeat = 0;
  int warmup = 0;
  int threads = 1;
  double wall_time_s = 0.0;
  double samples_per_s = 0.0;
  double mean_latency_s = 0.0;
  double p50_latency_s = 0.0;
  double p95_latency_s = 0.0;
  double encode_total_s = 0.0;
  double classify_total_s = 0.0;
  std::vector<double> encode_s;    // per timed sample
  std::vector<double> classify_s;  // per timed sample
};

/// Times encode+classify per sample (cycling through the given clouds) after
/// `warmup` untimed samples. Latencies are measured per sample inside the
/// workers; throughput is repeat / wall time of the timed phase.
BenchReport run_bench(const std::vector<PointCloudf>& clouds, const FeatureBank& bank,
                      const EncoderConfig& config, double gamma_scale, int repeat, int warmup,
                      int threads);

}  // namespace pointgpe
