#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nrdq/features.hpp"
#include "nrdq/image.hpp"

namespace nrdq {

enum class Target { psnr, ssim };

std::string_view to_string(Target t);
Target parse_target(std::string_view text);

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 12;
  int min_leaf = 5;
  int features_per_split = 7;
  double bootstrap_fraction = 1.0;
  std::uint64_t seed = 1;
  /// Feature indices the trees may split on; empty means all 19.
  std::vector<int> allowed_features;
  /// Worker threads used while growing trees. Not part of the model.
  int jobs = 1;

  void validate() const;
  std::vector<int> split_candidates() const;
};

/// Flattened tree node. feature < 0 marks a leaf; otherwise samples with
/// x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(const FeatureVector& f) const;
  int depth() const;
};

struct LabeledSample {
  FeatureVector features{};
  double label = 0.0;
  std::string key;
};

struct QualityModel {
  static constexpr int kFormatVersion = 1;

  Target target = Target::psnr;
  ForestConfig config;
  std::vector<Tree> trees;
  double label_min = 0.0;
  double label_max = 0.0;
  double oob_rmse = 0.0;
  int oob_count = 0;
  /// Raw variance reduction credited to each feature during training.
  std::array<double, kFeatureCount> split_gain{};

  double predict(const FeatureVector& f) const;
  double predict(std::span<const double> f) const;
};

/// Bootstrap-aggregated CART regression trees. Splits maximize the reduction
/// of the squared error among features_per_split randomly drawn features,
/// with thresholds at midpoints between adjacent distinct values; ties go to
/// the lowest feature index, then the lowest threshold.
QualityModel train(std::span<const LabeledSample> samples, const ForestConfig& cfg,
                   Target target = Target::psnr);

/// Normalized per-feature split gain (sums to 1).
std::array<double, kFeatureCount> feature_importance(const QualityModel& model);

void save_model(const QualityModel& model, const std::filesystem::path& path);
QualityModel load_model(const std::filesystem::path& path);
std::string serialize_model(const QualityModel& model);
QualityModel parse_model(std::string_view text);

struct RankedResult {
  std::string id;
  double score = 0.0;
};

/// Sorts by descending score, ties by ascending id.
std::vector<RankedResult> order_by_score(std::vector<RankedResult> results);

struct ResultPair {
  std::string id;
  Image noisy;
  Image denoised;
};

/// Predicts every pair and orders the ids best first. All pairs must share
/// the same noisy image.
std::vector<RankedResult> rank_results(const QualityModel& model,
                                       std::span<const ResultPair> pairs);

}  // namespace nrdq
