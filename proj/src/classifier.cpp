#include "pointgpe/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace pointgpe {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'N', 'B'};
constexpr uint32_t kVersion = 1;

void put_u32le(std::ostream& out, uint32_t value) {
  unsigned char bytes[4] = {static_cast<unsigned char>(value & 0xFF),
                            static_cast<unsigned char>((value >> 8) & 0xFF),
                            static_cast<unsigned char>((value >> 16) & 0xFF),
                            static_cast<unsigned char>((value >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

void put_u16le(std::ostream& out, uint16_t value) {
  unsigned char bytes[2] = {static_cast<unsigned char>(value & 0xFF),
                            static_cast<unsigned char>((value >> 8) & 0xFF)};
  out.write(reinterpret_cast<const char*>(bytes), 2);
}

void put_f32le(std::ostream& out, float value) {
  uint32_t bits;
  static_assert(sizeof(bits) == sizeof(value));
  std::memcpy(&bits, &value, 4);
  put_u32le(out, bits);
}

uint32_t get_u32le(std::istream& in, const std::string& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4))
    throw io_error(path + ": truncated bank file");
  return uint32_t(bytes[0]) | (uint32_t(bytes[1]) << 8) | (uint32_t(bytes[2]) << 16) |
         (uint32_t(bytes[3]) << 24);
}

uint16_t get_u16le(std::istream& in, const std::string& path) {
  unsigned char bytes[2];
  if (!in.read(reinterpret_cast<char*>(bytes), 2))
    throw io_error(path + ": truncated bank file");
  return uint16_t(bytes[0]) | (uint16_t(bytes[1]) << 8);
}

float get_f32le(std::istream& in, const std::string& path) {
  const uint32_t bits = get_u32le(in, path);
  float value;
  std::memcpy(&value, &bits, 4);
  return value;
}

std::vector<std::string> default_class_names(int num_classes) {
  std::vector<std::string> names(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "class_%02d", c);
    names[c] = buf;
  }
  return names;
}

int argmax_lowest(const Eigen::VectorXd& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace

FeatureBank build_bank(const std::vector<std::pair<GlobalFeature<double>, int>>& encoded_train,
                       int num_classes, std::vector<std::string> class_names,
                       std::string config_fingerprint) {
  if (encoded_train.empty()) throw std::invalid_argument("build_bank: empty training sequence");
  if (num_classes < 2) throw std::invalid_argument("build_bank: need at least 2 classes");
  if (num_classes > 65535)
    throw std::invalid_argument("build_bank: class count exceeds the u16 label range");
  const Eigen::Index dim = encoded_train.front().first.values.size();
  if (dim < 1) throw std::invalid_argument("build_bank: empty feature vector");

  FeatureBank bank;
  const int m = static_cast<int>(encoded_train.size());
  bank.features.resize(m, dim);
  bank.labels_one_hot = Eigen::MatrixXd::Zero(m, num_classes);
  bank.class_index.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto& [feature, label] = encoded_train[i];
    if (feature.values.size() != dim)
      throw std::invalid_argument("build_bank: inconsistent feature length at row " +
                                  std::to_string(i));
    if (label < 0 || label >= num_classes)
      throw std::invalid_argument("build_bank: label " + std::to_string(label) +
                                  " out of range [0, " + std::to_string(num_classes) + ")");
    Eigen::VectorXd row = feature.values;
    const double norm = row.norm();
    if (!(norm > 0.0))
      throw std::invalid_argument("build_bank: zero feature vector at row " + std::to_string(i));
    row /= norm;
    // round through float32 so memory matches the disk format bit for bit
    bank.features.row(i) = row.cast<float>().cast<double>();
    bank.class_index[i] = label;
    bank.labels_one_hot(i, label) = 1.0;
  }
  bank.class_names = class_names.empty() ? default_class_names(num_classes)
                                         : std::move(class_names);
  if (static_cast<int>(bank.class_names.size()) != num_classes)
    throw std::invalid_argument("build_bank: class name count does not match num_classes");
  bank.config_fingerprint = std::move(config_fingerprint);
  return bank;
}

ClassificationResult classify(const GlobalFeature<double>& test_feature, const FeatureBank& bank,
                              double gamma_scale, const std::string& test_config_fingerprint) {
  if (!(gamma_scale > 0.0)) throw std::invalid_argument("classify: gamma_scale must be positive");
  if (test_feature.values.size() != bank.dim())
    throw std::invalid_argument("classify: feature length " +
                                std::to_string(test_feature.values.size()) +
                                " does not match bank dimension " + std::to_string(bank.dim()));

  Eigen::VectorXd query = test_feature.values;
  const double norm = query.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("classify: zero feature vector");
  if (std::abs(norm - 1.0) > 1e-12) query /= norm;

  const Eigen::VectorXd sims = bank.features * query;
  const double top = sims.maxCoeff();
  const int m = bank.size();
  const int c = bank.num_classes();

  ClassificationResult result;
  result.logits = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd shifted = Eigen::VectorXd::Zero(c);
  for (int i = 0; i < m; ++i) {
    const int label = bank.class_index[i];
    result.logits[label] += std::exp(-gamma_scale * (1.0 - sims[i]));
    shifted[label] += std::exp(gamma_scale * (sims[i] - top));
  }
  result.predicted_class = argmax_lowest(shifted);
  result.top_similarity = top;

  const double logit_max = result.logits.maxCoeff();
  result.probabilities = (result.logits.array() - logit_max).exp();
  result.probabilities /= result.probabilities.sum();

  if (!test_config_fingerprint.empty() && !bank.config_fingerprint.empty() &&
      test_config_fingerprint != bank.config_fingerprint) {
    result.warning = "bank fingerprint " + bank.config_fingerprint +
                     " differs from query encoder fingerprint " + test_config_fingerprint;
  }
  return result;
}

int predict(const ClassificationResult& result) {
  if (result.logits.size() < 1) throw std::invalid_argument("predict: empty logits");
  return argmax_lowest(result.logits);
}

std::pair<double, double> select_gamma_loo(const FeatureBank& bank,
                                           const std::vector<double>& candidates, int threads) {
  const int m = bank.size();
  if (m < 2) throw std::invalid_argument("select_gamma_loo: need at least 2 bank rows");
  if (candidates.empty()) throw std::invalid_argument("select_gamma_loo: empty candidate list");
  for (const double g : candidates)
    if (!(g > 0.0)) throw std::invalid_argument("select_gamma_loo: candidates must be positive");

  const int n_candidates = static_cast<int>(candidates.size());
  const int c = bank.num_classes();
  if (threads < 1) threads = 1;
  threads = std::min<int>(threads, std::max(1, m));

  std::vector<std::vector<long long>> correct_per_thread(
      threads, std::vector<long long>(n_candidates, 0));

  const int block = 256;
  const int n_blocks = (m + block - 1) / block;
  std::atomic<int> next_block{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      auto& correct = correct_per_thread[t];
      Eigen::VectorXd class_sum(c);
      Eigen::ArrayXd weights(m);
      for (;;) {
        const int b = next_block.fetch_add(1);
        if (b >= n_blocks) break;
        const int row0 = b * block;
        const int rows = std::min(block, m - row0);
        const Eigen::MatrixXd sims =
            bank.features.middleRows(row0, rows) * bank.features.transpose();
        for (int r = 0; r < rows; ++r) {
          const int self = row0 + r;
          double top = -std::numeric_limits<double>::infinity();
          for (int j = 0; j < m; ++j)
            if (j != self && sims(r, j) > top) top = sims(r, j);
          for (int g = 0; g < n_candidates; ++g) {
            weights = (candidates[g] * (sims.row(r).transpose().array() - top)).exp();
            weights[self] = 0.0;
            class_sum.setZero();
            for (int j = 0; j < m; ++j)
              class_sum[bank.class_index[j]] += weights[j];
            if (argmax_lowest(class_sum) == bank.class_index[self]) ++correct[g];
          }
        }
      }
    });
  }
  for (auto& th : pool) th.join();

  double best_gamma = candidates.front();
  double best_accuracy = -1.0;
  for (int g = 0; g < n_candidates; ++g) {
    long long correct = 0;
    for (int t = 0; t < threads; ++t) correct += correct_per_thread[t][g];
    const double accuracy = static_cast<double>(correct) / m;
    if (accuracy > best_accuracy ||
        (accuracy == best_accuracy && candidates[g] < best_gamma)) {
      best_accuracy = accuracy;
      best_gamma = candidates[g];
    }
  }
  return {best_gamma, best_accuracy};
}

void save_bank(const FeatureBank& bank, const std::string& path) {
  if (bank.size() < 1) throw std::invalid_argument("save_bank: empty bank");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path + ": cannot open for writing");
  out.write(kMagic, 4);
  put_u32le(out, kVersion);
  put_u32le(out, static_cast<uint32_t>(bank.size()));
  put_u32le(out, static_cast<uint32_t>(bank.num_classes()));
  put_u32le(out, static_cast<uint32_t>(bank.dim()));
  for (int i = 0; i < bank.size(); ++i)
    for (int j = 0; j < bank.dim(); ++j)
      put_f32le(out, static_cast<float>(bank.features(i, j)));
  for (int i = 0; i < bank.size(); ++i)
    put_u16le(out, static_cast<uint16_t>(bank.class_index[i]));
  if (!out) throw io_error(path + ": write failed");
  out.close();

  std::ofstream meta(path + ".meta");
  if (!meta) throw io_error(path + ".meta: cannot open for writing");
  meta << "format=pgnb\n";
  meta << "version=" << kVersion << "\n";
  meta << "rows=" << bank.size() << "\n";
  meta << "classes=" << bank.num_classes() << "\n";
  meta << "dim=" << bank.dim() << "\n";
  meta << "fingerprint=" << bank.config_fingerprint << "\n";
  for (int c = 0; c < bank.num_classes(); ++c)
    meta << "class_" << c << "=" << bank.class_names[c] << "\n";
}

FeatureBank load_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open bank file");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw io_error(path + ": not a bank file (bad magic)");
  const uint32_t version = get_u32le(in, path);
  if (version != kVersion)
    throw io_error(path + ": unsupported bank version " + std::to_string(version));
  const uint32_t m = get_u32le(in, path);
  const uint32_t c = get_u32le(in, path);
  const uint32_t dim = get_u32le(in, path);
  if (m < 1 || c < 2 || dim < 1) throw io_error(path + ": invalid bank header");

  FeatureBank bank;
  bank.features.resize(m, dim);
  bank.labels_one_hot = Eigen::MatrixXd::Zero(m, c);
  bank.class_index.resize(m);
  for (uint32_t i = 0; i < m; ++i)
    for (uint32_t j = 0; j < dim; ++j) bank.features(i, j) = get_f32le(in, path);
  for (uint32_t i = 0; i < m; ++i) {
    const uint16_t label = get_u16le(in, path);
    if (label >= c)
      throw io_error(path + ": label " + std::to_string(label) + " out of range [0, " +
                     std::to_string(c) + ")");
    bank.class_index[i] = label;
    bank.labels_one_hot(i, label) = 1.0;
  }
  char extra;
  if (in.read(&extra, 1)) throw io_error(path + ": trailing bytes after bank payload");

  bank.class_names = default_class_names(static_cast<int>(c));
  std::ifstream meta(path + ".meta");
  if (meta) {
    std::string line;
    while (std::getline(meta, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key == "fingerprint") {
        bank.config_fingerprint = value;
      } else if (key.rfind("class_", 0) == 0) {
        const int idx = std::stoi(key.substr(6));
        if (idx >= 0 && idx < static_cast<int>(c)) bank.class_names[idx] = value;
      }
    }
  }
  return bank;
}

}  // namespace pointgpe
