#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nrdq/forest.hpp"
#include "nrdq/harness/benchmark.hpp"
#include "nrdq/harness/common.hpp"
#include "nrdq/harness/dataset.hpp"
#include "nrdq/tuner.hpp"

namespace nrdq::harness {

struct SplitSpec {
  double train_fraction = 0.05;
  int repetitions = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

struct CleanSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Seeded shuffle of the distinct clean ids; round(fraction * n) of them,
/// clamped to [1, n - 1], go to training. Both lists come back sorted.
CleanSplit split_by_clean(std::vector<std::string> clean_ids, double train_fraction,
                          std::uint64_t seed, std::uint64_t repetition);

/// Distinct clean ids in sorted order.
std::vector<std::string> clean_ids(const Dataset& rows);

/// Scores and truth labels of the results of one noisy image.
struct RankedGroup {
  std::vector<std::string> ids;
  std::vector<double> predicted;
  std::vector<double> truth;
};

/// Kendall tau of two score lists over the same items, each turned into a
/// best-first order with ties broken by ascending id.
double ranking_tau(const RankedGroup& g);

struct Variant {
  std::string name;           // "all", "only_<family>", "without_<family>"
  std::vector<int> features;  // allowed split features
};

/// all, then the six single-family models, then the six leave-one-out models.
std::vector<Variant> ranking_variants(bool studies = true);

struct VariantResult {
  Variant variant;
  // one entry per repetition
  std::vector<double> tau;
  std::vector<double> rmse;
  std::vector<double> rse;
  std::vector<double> oob_rmse;
};

struct RankingOptions {
  Target target = Target::psnr;
  SplitSpec split;
  ForestConfig forest;
  bool studies = true;
  /// Train on the benchmark noise levels, test only on intermediate ones.
  bool holdout_intermediate = false;
  int jobs = 1;
  std::function<void(std::string_view)> log;
};

struct RankingReport {
  RankingOptions options;
  std::string dataset_hash;
  std::size_t samples = 0;
  std::vector<VariantResult> variants;
  std::vector<int> test_groups;  // noisy images ranked, per repetition

  const VariantResult& find(std::string_view name) const;
};

RankingReport run_ranking_eval(const Dataset& rows, const RankingOptions& opt);

/// Structured text: config echo with hash, per-repetition rows, summary.
std::string format_ranking_report(const RankingReport& r);

struct SummaryRow {
  std::string variant;
  double tau_mean = 0.0, tau_std = 0.0;
  double rmse_mean = 0.0, rmse_std = 0.0;
};
/// Reads the [summary] block back from a report.
std::vector<SummaryRow> parse_ranking_summary(std::string_view report);

/// OOB RMSE of forests that differ only in their tree count. Because tree t
/// is seeded by (seed, t), smaller forests are prefixes of larger ones.
std::vector<double> oob_curve(std::span<const LabeledSample> samples, ForestConfig cfg,
                              std::span<const int> tree_counts);

struct TuningOptions {
  Method method = Method::nlm;
  Target target = Target::psnr;
  /// Restrict cases and training to one noise kind (nullopt keeps all).
  std::optional<NoiseKind> noise_kind = NoiseKind::gaussian;
  int train_grid = 80;   // θ values per training image
  int brute_grid = 80;   // oracle grid
  int max_cases = 25;
  double train_fraction = 0.5;
  std::uint64_t seed = 1;
  ForestConfig forest;
  std::optional<TuneConfig> tune;  // defaults to TuneConfig::for_method
  /// Replace step and dtheta with calibrate_step() on the training curves.
  bool calibrate = true;
  /// Directory holding the clean images; defaults to the manifest's clean_dir.
  std::filesystem::path clean_dir;
  /// When set, each case's trace is written here as CSV.
  std::filesystem::path trace_dir;
  int jobs = 1;
  std::function<void(std::string_view)> log;
};

struct TuningCase {
  std::string clean_id;
  NoiseSpec noise;
  double theta_star = 0.0;
  double theta_gt = 0.0;
  double gap = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

struct TuningReport {
  TuningOptions options;
  TuneConfig tune;
  double model_oob_rmse = 0.0;
  std::size_t training_samples = 0;
  std::optional<Calibration> calibration;
  std::vector<TuningCase> cases;

  MeanStd gap() const;
  MeanStd iterations() const;
};

TuningReport run_tuning_eval(const Manifest& manifest, const std::filesystem::path& base,
                             const TuningOptions& opt);

std::string format_tuning_report(const TuningReport& r);

// --- config files -------------------------------------------------------------

struct Settings {
  ForestConfig forest;
  SplitSpec split;
  std::optional<double> step, dtheta, theta_min, theta_max;
  std::optional<int> max_iters;

  /// Applies the tuner overrides on top of `base`.
  TuneConfig tune_config(TuneConfig base) const;
};

/// key = value lines; '#' starts a comment. Keys: n_trees, max_depth,
/// min_leaf, features_per_split, bootstrap_fraction, forest_seed,
/// train_fraction, repetitions, split_seed, step, dtheta, max_iters,
/// theta_min, theta_max.
Settings parse_settings(std::string_view text, Settings base = {});
Settings load_settings(const std::filesystem::path& path, Settings base = {});

std::string echo_forest(const ForestConfig& c);
std::string echo_split(const SplitSpec& s);
std::string echo_tune(const TuneConfig& t);

}  // namespace nrdq::harness
