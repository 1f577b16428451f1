#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "nrdq/image.hpp"

namespace nrdq {

inline constexpr std::size_t kFeatureCount = 19;

/// Column names in canonical order.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "ss_97", "ss_98", "ss_99", "sr_1", "sr_2",  "sr_3",  "sgm_40",
    "sgm_50", "sgm_60", "sc_6", "sc_8", "sc_10", "vr_1", "vr_2",
    "vr_3", "vr_4", "vr_5", "vr_6", "gh"};

enum class FeatureFamily { ss, sr, sgm, sc, vr, gh };

inline constexpr std::array<FeatureFamily, 6> kAllFamilies = {
    FeatureFamily::ss, FeatureFamily::sr, FeatureFamily::sgm,
    FeatureFamily::sc, FeatureFamily::vr, FeatureFamily::gh};

std::string_view to_string(FeatureFamily f);
FeatureFamily parse_family(std::string_view text);

struct FamilySpan {
  std::size_t offset;
  std::size_t size;
};
FamilySpan family_span(FeatureFamily f);

using FeatureVector = std::array<double, kFeatureCount>;

struct SrParams {
  double sigma_spatial;
  double sigma_structure;
  double sigma_color;
};

inline constexpr std::array<SrParams, 3> kSrPresets = {
    SrParams{1.0, 1.0, 4.0}, SrParams{4.0, 4.0, 10.0},
    SrParams{10.0, 10.0, 30.0}};

enum class Norm { l1, l2 };

struct VrConfig {
  Norm data_norm;
  Norm smoothness_norm;
  double lambda;
};

inline constexpr std::array<VrConfig, 6> kVrPresets = {
    VrConfig{Norm::l1, Norm::l1, 0.5}, VrConfig{Norm::l1, Norm::l1, 1.0},
    VrConfig{Norm::l2, Norm::l1, 0.5}, VrConfig{Norm::l2, Norm::l1, 1.0},
    VrConfig{Norm::l2, Norm::l2, 0.5}, VrConfig{Norm::l2, Norm::l2, 1.0}};

inline constexpr int kSsPatchSide = 15;
inline constexpr std::array<double, 3> kSsAlphas = {0.97, 0.98, 0.99};
inline constexpr std::array<int, 3> kSgmPercents = {40, 50, 60};
inline constexpr std::array<int, 3> kScWindows = {6, 8, 10};
inline constexpr int kGhBins = 100;
inline constexpr int kGhDeconvIterations = 30;

// All feature functions take 1-channel images.

/// Local self-similarity: fraction of singular values of the 15x15 patch
/// matrix needed to reach alpha of the singular-value mass.
std::array<double, 3> feature_ss(const Image& denoised);

/// Structural residual: RMS of the noise map after a normalized
/// space / intensity / gradient-magnitude weighted average guided by the
/// noisy image.
std::array<double, 3> feature_sr(const Image& noisy, const Image& denoised);

/// Residual map used by feature_sr, exposed for inspection.
std::vector<double> structural_residual_map(const Image& noisy,
                                            const Image& denoised,
                                            const SrParams& params);

/// Std of the m% smallest non-zero gradient magnitudes.
std::array<double, 3> feature_sgm(const Image& denoised);

/// -pearson(SSIM(denoised, noisy), SSIM(noise map + 128, noisy)) for
/// uniform windows of 6, 8 and 10; 0 when a map is flat.
std::array<double, 3> feature_sc(const Image& noisy, const Image& denoised);

/// (data term + lambda * smoothness term) / N for the six norm presets; l2
/// terms are squared norms.
std::array<double, 6> feature_vr(const Image& noisy, const Image& denoised);

/// Normalized 100-bin gradient magnitude histogram over [0, 255 sqrt 2].
std::vector<double> gradient_histogram(const Image& img);

/// Target gradient histogram estimated from the noisy image alone.
std::vector<double> target_gradient_histogram(const Image& noisy);

/// L1 distance between the target and the denoised gradient histograms.
double feature_gh(const Image& noisy, const Image& denoised);

/// L1 distance of two histograms.
double histogram_l1(std::span<const double> a, std::span<const double> b);

/// All 19 features; color pairs are averaged over channels.
FeatureVector extract_features(const Image& noisy, const Image& denoised);

/// Features of several results of one noisy image; identical to calling
/// extract_features on each pair, but shares the noisy-only work.
std::vector<FeatureVector> extract_features_batch(const Image& noisy,
                                                  std::span<const Image> denoised);

/// Feature vector of a 1-channel pair.
FeatureVector extract_features_gray(const Image& noisy, const Image& denoised);

}  // namespace nrdq
