#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nrdq/image.hpp"

namespace nrdq {

/// SSIM window: the 11x11 Gaussian (sigma 1.5) used for labels, or a
/// uniform k x k box.
struct SsimConfig {
  enum class Window { gaussian, uniform };
  Window window = Window::gaussian;
  int size = 11;
  double gaussian_sigma = 1.5;
  double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  double c2 = (0.03 * 255.0) * (0.03 * 255.0);

  static SsimConfig gaussian_11() { return {}; }
  static SsimConfig uniform(int k) {
    SsimConfig cfg;
    cfg.window = Window::uniform;
    cfg.size = k;
    return cfg;
  }
  /// Normalized 1-D window taps; the 2-D window is their outer product.
  std::vector<double> taps() const;
};

/// Map over valid window positions: (width - k + 1) x (height - k + 1).
struct SsimMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
};

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(255^2 / MSE) over all samples; identical inputs give kPsnrCap.
double psnr(const Image& a, const Image& b);

SsimMap ssim_map(const Image& a, const Image& b, const SsimConfig& cfg);

/// Mean SSIM with the Gaussian window; color inputs average the per-channel
/// scores.
double ssim(const Image& a, const Image& b);

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> a,
                              std::span<const double> b);

/// Two orderings of the same ids, best first.
struct RankingPair {
  std::vector<int> predicted;
  std::vector<int> truth;
};

/// (concordant - discordant) / (n (n - 1) / 2), counted by merge sort.
double kendall_tau(const RankingPair& r);

struct RegressionError {
  double rmse = 0.0;
  double rse = 0.0;
};

/// rmse = sqrt(mean squared error); rse = SSE / total sum of squares of
/// the truth. Throws when the truth is constant.
RegressionError rmse_rse(std::span<const double> predicted,
                         std::span<const double> truth);

}  // namespace nrdq
