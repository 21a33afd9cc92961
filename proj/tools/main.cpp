// pointgpe command-line harness: bank building, evaluation, single-cloud
// classification, few-shot runs, throughput benchmarking and hyperparameter
// sweeps on top of the pointgpe library.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "pointgpe/classifier.hpp"
#include "pointgpe/dataset.hpp"
#include "pointgpe/encoder.hpp"
#include "pointgpe/eval.hpp"
#include "pointgpe/report.hpp"
#include "pointgpe/synthetic.hpp"

namespace {

using namespace pointgpe;

constexpr int kExitSuccess = 0;
constexpr int kExitEvalFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonFlags {
  std::string dataset_dir;
  std::string dataset = "modelnet40";
  std::string split = "PB-T50-RS";
  int points = 1024;
  std::string sample = "first-n";
  uint64_t seed = 0;
  int threads = 0;
  std::string out;
  int limit = 0;
  bool force = false;

  int refs_per_axis = 9;
  double sigma = 0.35;
  int k = 120;
  int stages = 4;
  std::string agg_mode = "paper-literal";
  double gamma = 100.0;
  bool normalize_input = true;
  bool clamp_k = false;
  std::string group_std = "pooled";
  std::vector<double> stage_sigma;

  EncoderConfig encoder() const {
    EncoderConfig cfg;
    cfg.refs_per_axis = refs_per_axis;
    cfg.sigma = sigma;
    cfg.neighbors = k;
    cfg.stages = stages;
    cfg.aggregation = aggregation_mode_from_string(agg_mode);
    cfg.normalize_input = normalize_input;
    cfg.clamp_k = clamp_k;
    cfg.group_std = group_std_mode_from_string(group_std);
    cfg.stage_sigma = stage_sigma;
    cfg.validate();
    return cfg;
  }
};

void add_dataset_flags(CLI::App* cmd, CommonFlags& flags) {
  // consumed before parsing by expand_config_file; registered for --help only
  static std::string config_path;
  cmd->add_option("--config", config_path,
                  "Flat key=value config file; command-line flags override it");
  cmd->add_option("--dataset-dir", flags.dataset_dir, "Directory holding the dataset archives");
  cmd->add_option("--dataset", flags.dataset, "Dataset name")
      ->check(CLI::IsMember({"modelnet40", "scanobjectnn"}));
  cmd->add_option("--split", flags.split, "ScanObjectNN split")
      ->check(CLI::IsMember({"OBJ-BG", "OBJ-ONLY", "PB-T50-RS"}));
  cmd->add_option("--points", flags.points, "Points sampled per cloud")->capture_default_str();
  cmd->add_option("--sample", flags.sample, "Point sampling strategy")
      ->check(CLI::IsMember({"first-n", "random"}))
      ->capture_default_str();
  cmd->add_option("--seed", flags.seed, "Seed for every random draw")->capture_default_str();
}

void add_encoder_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--refs-per-axis", flags.refs_per_axis, "Reference values per axis (V)")
      ->capture_default_str();
  cmd->add_option("--sigma", flags.sigma, "Gaussian width")->capture_default_str();
  cmd->add_option("--k", flags.k, "Neighbors per group (K)")->capture_default_str();
  cmd->add_option("--stages", flags.stages, "Encoder stages (S)")->capture_default_str();
  cmd->add_option("--agg-mode", flags.agg_mode, "Stage aggregation rule")
      ->check(CLI::IsMember({"paper-literal", "multiplicative"}))
      ->capture_default_str();
  cmd->add_flag("--normalize-input,!--no-normalize-input", flags.normalize_input,
                "Normalize clouds to the unit sphere before encoding");
  cmd->add_flag("--clamp-k", flags.clamp_k, "Shrink K on stages with fewer points");
  cmd->add_option("--group-std", flags.group_std, "Group normalization std mode")
      ->check(CLI::IsMember({"pooled", "per-dimension"}))
      ->capture_default_str();
  cmd->add_option("--stage-sigma", flags.stage_sigma,
                  "Per-stage sigma override (one value per stage)")
      ->delimiter(',');
}

void add_run_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--threads", flags.threads, "Worker threads (0 = hardware)")
      ->capture_default_str();
  cmd->add_option("--out", flags.out, "Output path base for CSV/JSONL reports");
  cmd->add_option("--limit", flags.limit,
                  "Evaluate only the first N test clouds (0 = all)")
      ->capture_default_str();
}

// Expands "--config FILE" in place: every key=value line of the file becomes
// a "--key value" argument unless that flag is already on the command line,
// so explicit flags always win. Lines starting with '#' and blanks are
// ignored.
void expand_config_file(std::vector<std::string>& args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw std::invalid_argument("--config needs a file path");
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (path.empty()) return;

  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open config file");
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos || eq == first)
      throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                  ": expected key=value");
    std::string key = line.substr(first, eq - first);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::string value = line.substr(eq + 1);
    while (!value.empty() && (value.back() == ' ' || value.back() == '\t' ||
                              value.back() == '\r'))
      value.pop_back();
    const size_t value_start = value.find_first_not_of(" \t");
    value = value_start == std::string::npos ? "" : value.substr(value_start);

    const std::string flag = "--" + key;
    bool overridden = false;
    for (const auto& arg : args)
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) overridden = true;
    if (overridden) continue;
    args.push_back(flag + "=" + value);
  }
}

std::pair<LabeledDataset, LabeledDataset> load_dataset(const CommonFlags& flags) {
  if (flags.dataset_dir.empty())
    throw io_error("--dataset-dir is required. For ModelNet40 download "
                   "modelnet40_ply_hdf5_2048.zip; for ScanObjectNN request the official "
                   "h5_files archive.");
  if (flags.dataset == "modelnet40") return load_modelnet40(flags.dataset_dir);
  return load_scanobjectnn(flags.dataset_dir, flags.split);
}

std::vector<PointCloudf> prepare_clouds(const LabeledDataset& dataset,
                                        const CommonFlags& flags) {
  const SampleStrategy strategy = sample_strategy_from_string(flags.sample);
  std::vector<PointCloudf> prepared;
  prepared.reserve(dataset.clouds.size());
  for (size_t i = 0; i < dataset.clouds.size(); ++i) {
    const uint64_t seed = rng::mix(flags.seed, static_cast<uint64_t>(i));
    prepared.push_back(sample_points(dataset.clouds[i], flags.points, strategy, seed));
  }
  return prepared;
}

std::vector<PointCloudf> apply_limit(std::vector<PointCloudf> clouds, int limit) {
  if (limit > 0 && limit < static_cast<int>(clouds.size()))
    clouds.resize(static_cast<size_t>(limit));
  return clouds;
}

void print_config_echo(const std::vector<std::pair<std::string, std::string>>& echo) {
  std::printf("config:");
  for (const auto& [key, value] : echo) std::printf(" %s=%s", key.c_str(), value.c_str());
  std::printf("\n");
}

FeatureBank bank_from_clouds(const std::vector<PointCloudf>& clouds, int num_classes,
                             const std::vector<std::string>& class_names,
                             const EncoderConfig& cfg, int threads) {
  const auto features = encode_dataset(clouds, cfg, threads);
  std::vector<std::pair<GlobalFeature<double>, int>> input;
  input.reserve(features.size());
  for (size_t i = 0; i < features.size(); ++i)
    input.emplace_back(features[i], clouds[i].label.value());
  return build_bank(input, num_classes, class_names, cfg.fingerprint());
}

int cmd_build_bank(const CommonFlags& flags) {
  const EncoderConfig cfg = flags.encoder();
  if (flags.out.empty()) throw std::invalid_argument("build-bank: --out is required");
  const auto [train, test] = load_dataset(flags);
  (void)test;
  const auto clouds = prepare_clouds(train, flags);

  const auto t0 = std::chrono::steady_clock::now();
  const FeatureBank bank =
      bank_from_clouds(clouds, train.num_classes(), train.class_names, cfg, flags.threads);
  save_bank(bank, flags.out);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  print_config_echo(cfg.to_key_values());
  std::printf("bank: rows=%d classes=%d dim=%d split=%s\n", bank.size(), bank.num_classes(),
              bank.dim(), train.split_name.c_str());
  std::printf("wrote %s (+.meta) in %.2f s (%.1f clouds/s)\n", flags.out.c_str(), elapsed,
              bank.size() / elapsed);
  return kExitSuccess;
}

int cmd_eval(const CommonFlags& flags, const std::string& bank_path, bool select_gamma,
             std::vector<double> candidates) {
  const EncoderConfig cfg = flags.encoder();
  const FeatureBank bank = load_bank(bank_path);
  if (!bank.config_fingerprint.empty() && bank.config_fingerprint != cfg.fingerprint()) {
    if (!flags.force)
      throw std::invalid_argument("eval: bank " + bank_path + " was built under fingerprint " +
                                  bank.config_fingerprint + " but the current config is " +
                                  cfg.fingerprint() + " (use --force to evaluate anyway)");
    std::fprintf(stderr, "warning: evaluating despite a fingerprint mismatch (--force)\n");
  }

  const auto [train, test] = load_dataset(flags);
  (void)train;
  const auto clouds = apply_limit(prepare_clouds(test, flags), flags.limit);

  EvalOptions options;
  options.threads = flags.threads;
  options.gamma_scale = flags.gamma;
  if (select_gamma) {
    const auto [gamma, loo] =
        select_gamma_loo(bank, candidates, resolve_threads(flags.threads));
    options.gamma_scale = gamma;
    std::printf("select-gamma: gamma=%g loo_accuracy=%.4f\n", gamma, loo);
  }

  const EvalReport report = evaluate(bank, clouds, cfg, options);
  print_config_echo(report.config_echo);
  std::printf("samples=%zu accuracy=%.4f (%.2f%%)\n", report.truth.size(),
              report.overall_accuracy, 100.0 * report.overall_accuracy);
  std::printf("encode %.2f s, classify %.2f s, wall %.2f s, %.1f samples/s, threads=%d\n",
              report.encode_time_s, report.classify_time_s, report.wall_time_s,
              report.throughput, report.threads);
  if (!flags.out.empty()) {
    write_eval_csv(flags.out + ".csv", report, bank.class_names);
    write_confusion_csv(flags.out + ".confusion.csv", report, bank.class_names);
    write_eval_jsonl(flags.out + ".jsonl", report, bank.class_names);
    std::printf("wrote %s.csv, %s.confusion.csv, %s.jsonl\n", flags.out.c_str(),
                flags.out.c_str(), flags.out.c_str());
  }
  return kExitSuccess;
}

int cmd_classify(const CommonFlags& flags, const std::string& bank_path,
                 const std::string& xyz_path) {
  const EncoderConfig cfg = flags.encoder();
  const FeatureBank bank = load_bank(bank_path);
  PointCloudd cloud = load_xyz_text(xyz_path);
  if (flags.points > 0 && flags.points < static_cast<int>(cloud.points.rows()))
    cloud = sample_points(cloud, flags.points, sample_strategy_from_string(flags.sample),
                          flags.seed);

  const GlobalFeature<double> feature = encode(cloud, cfg);
  const ClassificationResult result = classify(feature, bank, flags.gamma, cfg.fingerprint());
  if (!result.warning.empty()) std::fprintf(stderr, "warning: %s\n", result.warning.c_str());

  std::printf("%s: %s (class %d, top similarity %.4f, probability %.4f)\n", xyz_path.c_str(),
              bank.class_names[result.predicted_class].c_str(), result.predicted_class,
              result.top_similarity, result.probabilities[result.predicted_class]);
  return kExitSuccess;
}

int cmd_fewshot(const CommonFlags& flags, int way, int shot, int queries, int runs,
                bool select_gamma) {
  const EncoderConfig cfg = flags.encoder();
  const auto [train, test] = load_dataset(flags);
  (void)test;
  LabeledDataset sampled = train;
  {
    const auto clouds = prepare_clouds(train, flags);
    sampled.clouds = clouds;
  }

  const FewShotResult result = run_fewshot(sampled, cfg, way, shot, queries, runs, flags.seed,
                                           flags.gamma, select_gamma, flags.threads);
  print_config_echo(cfg.to_key_values());
  for (size_t r = 0; r < result.per_run_accuracy.size(); ++r)
    std::printf("run %zu: accuracy=%.4f gamma=%g\n", r, result.per_run_accuracy[r],
                result.per_run_gamma[r]);
  std::printf("%d-way %d-shot over %d runs: mean=%.4f (%.2f%%) std=%.4f\n", way, shot, runs,
              result.mean_accuracy, 100.0 * result.mean_accuracy, result.stddev_accuracy);
  return kExitSuccess;
}

int cmd_bench(const CommonFlags& flags, int repeat, int warmup, int bank_size,
              bool have_dataset) {
  const EncoderConfig cfg = flags.encoder();
  std::vector<PointCloudf> clouds;
  LabeledDataset support;
  if (have_dataset) {
    const auto [train, test] = load_dataset(flags);
    support = train;
    support.clouds = prepare_clouds(train, flags);
    if (bank_size > 0 && bank_size < support.size())
      support.clouds.resize(static_cast<size_t>(bank_size));
    clouds = apply_limit(prepare_clouds(test, flags), flags.limit);
  } else {
    support = make_synthetic_dataset(std::max(1, bank_size / 3), flags.points, flags.seed);
    const auto queries = make_synthetic_dataset(8, flags.points, flags.seed + 1);
    clouds = queries.clouds;
  }

  const FeatureBank bank = bank_from_clouds(support.clouds, support.num_classes(),
                                            support.class_names, cfg, flags.threads);
  const BenchReport report =
      run_bench(clouds, bank, cfg, flags.gamma, repeat, warmup, flags.threads);

  print_config_echo(cfg.to_key_values());
  std::printf("bench: repeat=%d warmup=%d threads=%d bank_rows=%d\n", report.repeat,
              report.warmup, report.threads, bank.size());
  std::printf("throughput %.2f samples/s, latency mean %.2f ms, p50 %.2f ms, p95 %.2f ms\n",
              report.samples_per_s, 1e3 * report.mean_latency_s, 1e3 * report.p50_latency_s,
              1e3 * report.p95_latency_s);
  std::printf("stage totals: encode %.2f s, classify %.2f s\n", report.encode_total_s,
              report.classify_total_s);
  if (!flags.out.empty()) {
    write_bench_csv(flags.out + ".csv", report);
    write_bench_jsonl(flags.out + ".jsonl", report, cfg.to_key_values());
    std::printf("wrote %s.csv, %s.jsonl\n", flags.out.c_str(), flags.out.c_str());
  }
  return kExitSuccess;
}

int cmd_sweep(const CommonFlags& flags, const std::string& axis,
              const std::vector<double>& values, const SweepCoGrid& co) {
  const EncoderConfig cfg = flags.encoder();
  const auto [train, test] = load_dataset(flags);
  const auto train_clouds = prepare_clouds(train, flags);
  const auto test_clouds = apply_limit(prepare_clouds(test, flags), flags.limit);

  const SweepGrid grid = run_sweep(train_clouds, test_clouds, cfg, flags.gamma,
                                   sweep_axis_from_string(axis), values, co, flags.threads);
  print_config_echo(cfg.to_key_values());
  for (const auto& summary : summarize_sweep(grid))
    std::printf("%s=%g: best=%.4f average=%.4f over %d configs\n", grid.axis.c_str(),
                summary.value, summary.best, summary.average, summary.count);
  if (!flags.out.empty()) {
    write_sweep_csv(flags.out, grid);
    std::printf("wrote %s (%zu rows)\n", flags.out.c_str(), grid.rows.size());
  }
  return kExitSuccess;
}

int cmd_select_gamma(const CommonFlags& flags, const std::string& bank_path,
                     const std::vector<double>& candidates) {
  const FeatureBank bank = load_bank(bank_path);
  const auto [gamma, accuracy] =
      select_gamma_loo(bank, candidates, resolve_threads(flags.threads));
  std::printf("bank %s: rows=%d classes=%d\n", bank_path.c_str(), bank.size(),
              bank.num_classes());
  std::printf("gamma=%g loo_accuracy=%.4f\n", gamma, accuracy);
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"training-free point cloud classification with Gaussian positional encoding"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<double> gamma_candidates = {1, 3, 10, 30, 100, 300, 1000};

  auto* build = app.add_subcommand("build-bank", "Encode a training split into a bank file");
  add_dataset_flags(build, flags);
  add_encoder_flags(build, flags);
  add_run_flags(build, flags);

  auto* eval = app.add_subcommand("eval", "Classify a test split against a bank");
  std::string eval_bank;
  bool eval_select_gamma = false;
  eval->add_option("--bank", eval_bank, "Bank file produced by build-bank")->required();
  eval->add_option("--gamma", flags.gamma, "Similarity activation scale")->capture_default_str();
  eval->add_flag("--select-gamma", eval_select_gamma,
                 "Pick gamma by leave-one-out on the bank before evaluating");
  eval->add_option("--candidates", gamma_candidates, "Gamma candidates for --select-gamma")
      ->delimiter(',');
  eval->add_flag("--force", flags.force, "Evaluate even if the bank fingerprint differs");
  add_dataset_flags(eval, flags);
  add_encoder_flags(eval, flags);
  add_run_flags(eval, flags);

  auto* classify_cmd = app.add_subcommand("classify", "Classify one XYZ text file");
  std::string classify_bank, classify_input;
  classify_cmd->add_option("--bank", classify_bank, "Bank file")->required();
  classify_cmd->add_option("input", classify_input, "XYZ text file")->required();
  classify_cmd->add_option("--gamma", flags.gamma)->capture_default_str();
  add_dataset_flags(classify_cmd, flags);
  add_encoder_flags(classify_cmd, flags);

  auto* fewshot = app.add_subcommand("fewshot", "N-way K-shot episodes on the train split");
  int way = 5, shot = 10, queries = 20, runs = 10;
  bool fewshot_select_gamma = false;
  fewshot->add_option("--way", way)->capture_default_str();
  fewshot->add_option("--shot", shot)->capture_default_str();
  fewshot->add_option("--queries", queries, "Query clouds per class")->capture_default_str();
  fewshot->add_option("--runs", runs)->capture_default_str();
  fewshot->add_option("--gamma", flags.gamma)->capture_default_str();
  fewshot->add_flag("--select-gamma", fewshot_select_gamma,
                    "Pick gamma per episode by leave-one-out on the support bank");
  add_dataset_flags(fewshot, flags);
  add_encoder_flags(fewshot, flags);
  add_run_flags(fewshot, flags);

  auto* bench = app.add_subcommand("bench", "Per-sample encode+classify throughput");
  int repeat = 64, warmup = 8, bank_size = 24;
  bench->add_option("--repeat", repeat, "Timed samples")->capture_default_str();
  bench->add_option("--warmup", warmup, "Untimed warmup samples")->capture_default_str();
  bench->add_option("--bank-size", bank_size, "Clouds encoded into the reference bank")
      ->capture_default_str();
  bench->add_option("--gamma", flags.gamma)->capture_default_str();
  add_dataset_flags(bench, flags);
  add_encoder_flags(bench, flags);
  add_run_flags(bench, flags);

  auto* sweep = app.add_subcommand("sweep", "Accuracy over a hyperparameter grid");
  std::string sweep_axis;
  std::vector<double> sweep_values;
  SweepCoGrid co;
  std::vector<std::string> co_modes;
  sweep->add_option("--axis", sweep_axis, "K, dimension, stages or sigma")->required();
  sweep->add_option("--values", sweep_values, "Main axis values")->required()->delimiter(',');
  sweep->add_option("--co-k", co.k, "Co-swept K values")->delimiter(',');
  sweep->add_option("--co-dimension", co.dimension, "Co-swept dimensions (3*V)")->delimiter(',');
  sweep->add_option("--co-stages", co.stages, "Co-swept stage counts")->delimiter(',');
  sweep->add_option("--co-sigma", co.sigma, "Co-swept sigmas")->delimiter(',');
  sweep->add_option("--co-gamma", co.gamma, "Co-swept gammas")->delimiter(',');
  sweep->add_option("--co-agg-mode", co_modes, "Co-swept aggregation modes")->delimiter(',');
  sweep->add_option("--gamma", flags.gamma)->capture_default_str();
  add_dataset_flags(sweep, flags);
  add_encoder_flags(sweep, flags);
  add_run_flags(sweep, flags);

  auto* select = app.add_subcommand("select-gamma", "Leave-one-out gamma selection on a bank");
  std::string select_bank;
  select->add_option("--bank", select_bank, "Bank file")->required();
  select->add_option("--candidates", gamma_candidates)->delimiter(',');
  select->add_option("--threads", flags.threads)->capture_default_str();

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    expand_config_file(args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitConfigError;
  }

  try {
    if (build->parsed()) return cmd_build_bank(flags);
    if (eval->parsed()) return cmd_eval(flags, eval_bank, eval_select_gamma, gamma_candidates);
    if (classify_cmd->parsed()) return cmd_classify(flags, classify_bank, classify_input);
    if (fewshot->parsed())
      return cmd_fewshot(flags, way, shot, queries, runs, fewshot_select_gamma);
    if (bench->parsed())
      return cmd_bench(flags, repeat, warmup, bank_size, !flags.dataset_dir.empty());
    if (sweep->parsed()) {
      for (const auto& mode : co_modes) co.agg_modes.push_back(aggregation_mode_from_string(mode));
      return cmd_sweep(flags, sweep_axis, sweep_values, co);
    }
    if (select->parsed()) return cmd_select_gamma(flags, select_bank, gamma_candidates);
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitEvalFailure;
  }
  return kExitSuccess;
}
