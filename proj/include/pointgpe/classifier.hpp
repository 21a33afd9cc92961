#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

#include "pointgpe/types.hpp"

namespace pointgpe {

/// Training-free classifier state: encoded training features stacked row-wise
/// with one-hot labels. Feature rows are L2-normalized and rounded through
/// float32, so the in-memory values equal the on-disk representation exactly.
struct FeatureBank {
  Eigen::MatrixXd features;        // M x dim, unit-norm rows
  Eigen::MatrixXd labels_one_hot;  // M x C
  Eigen::VectorXi class_index;     // M
  std::vector<std::string> class_names;  // C
  std::string config_fingerprint;

  int size() const { return static_cast<int>(features.rows()); }
  int num_classes() const { return static_cast<int>(labels_one_hot.cols()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

struct ClassificationResult {
  Eigen::VectorXd logits;         // C, per-class sums of exp(-gamma*(1-sim))
  Eigen::VectorXd probabilities;  // softmax of logits
  int predicted_class = 0;
  double top_similarity = 0.0;
  std::string warning;  // set when the bank was built under another encoder config
};

/// Stacks encoded training features (paired with class indices) into a bank.
/// Rows keep input order; features are L2-normalized; labels become one-hot.
FeatureBank build_bank(const std::vector<std::pair<GlobalFeature<double>, int>>& encoded_train,
                       int num_classes, std::vector<std::string> class_names = {},
                       std::string config_fingerprint = {});

/// Scores one feature against the bank: cosine similarities against every
/// row, exponential activation exp(-gamma_scale*(1-sim)), and per-class
/// accumulation through the one-hot labels.
///
/// The stored logits follow that formula directly and can underflow to zero
/// when gamma_scale*(1-max_sim) is extreme; predicted_class is computed from
/// max-shifted weights and stays the exact argmax regardless.
ClassificationResult classify(const GlobalFeature<double>& test_feature, const FeatureBank& bank,
                              double gamma_scale,
                              const std::string& test_config_fingerprint = {});

/// Argmax over the stored logits; ties resolve to the lowest index.
int predict(const ClassificationResult& result);

/// Leave-one-out selection of gamma_scale: every bank row is classified
/// against the bank with itself excluded, per candidate. Returns the
/// candidate with the highest LOO accuracy (ties: smallest gamma) and that
/// accuracy.
std::pair<double, double> select_gamma_loo(const FeatureBank& bank,
                                           const std::vector<double>& candidates,
                                           int threads = 1);

/// Binary bank container: magic "PGNB", then version, row count M, class
/// count C and feature dimension as little-endian u32, followed by row-major
/// float32 features and u16 class indices. Class names and the config
/// fingerprint live in a "<path>.meta" key=value sidecar.
void save_bank(const FeatureBank& bank, const std::string& path);
FeatureBank load_bank(const std::string& path);

}  // namespace pointgpe
