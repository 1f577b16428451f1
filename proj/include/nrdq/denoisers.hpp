#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nrdq/image.hpp"

namespace nrdq {

enum class Method { gaussian_filter, bilateral, median, nlm, dct };

inline constexpr std::array<Method, 5> kAllMethods = {
    Method::gaussian_filter, Method::bilateral, Method::median, Method::nlm,
    Method::dct};

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

/// A denoiser together with either a grid index or a continuous θ.
/// Serialized as "method:index" or "method:theta=<value>".
struct DenoiserId {
  Method method = Method::gaussian_filter;
  bool continuous = false;
  int index = 0;
  double theta = 0.0;

  static DenoiserId grid(Method m, int index) { return {m, false, index, 0.0}; }
  static DenoiserId with_theta(Method m, double theta) {
    return {m, true, 0, theta};
  }

  std::string to_string() const;
  /// Just the parameter half: "2" or "theta=1.25".
  std::string param_string() const;
  static DenoiserId parse(std::string_view text);
  static DenoiserId parse(std::string_view method, std::string_view param);

  friend bool operator==(const DenoiserId&, const DenoiserId&) = default;
};

/// Number of grid settings per method: GF 3, BF 4, MED 3, NLM 4, DCT 3.
int grid_size(Method m);

/// All 17 grid settings in canonical order (method, then index).
std::vector<DenoiserId> full_grid();

struct ThetaRange {
  double min = 0.0;
  double max = 0.0;
  double width() const { return max - min; }
  double mid() const { return 0.5 * (min + max); }
};

/// Continuous parameter range of tunable methods (nlm, bilateral,
/// gaussian_filter); nullopt for the rest.
std::optional<ThetaRange> theta_range(Method m);

// Parameters shared by the grid and the tuner.
inline constexpr std::array<double, 3> kGaussianSigmas = {0.8, 1.5, 2.5};
inline constexpr double kBilateralSpatialSigma = 1.5;
inline constexpr std::array<double, 4> kBilateralRangeSigmas = {10.0, 25.0, 45.0, 70.0};
inline constexpr std::array<int, 3> kMedianRadii = {1, 2, 3};
inline constexpr std::array<double, 4> kNlmStrengths = {0.6, 1.0, 1.4, 1.8};
inline constexpr int kNlmPatchRadius = 2;
inline constexpr int kNlmSearchRadius = 7;
inline constexpr std::array<double, 3> kDctThresholds = {2.0, 3.0, 4.0};
inline constexpr double kMinNoiseSigma = 1.0;

/// Separable Gaussian blur, radius ceil(3 sigma), symmetric reflection.
Image gaussian_filter(const Image& img, double sigma);

/// Space/range weighted mean. The spatial window matches gaussian_filter
/// (radius ceil(3 sigma_s), reflected), so a huge sigma_r reproduces it.
Image bilateral_filter(const Image& img, double sigma_s, double sigma_r);

Image median_filter(const Image& img, int radius);

/// Non-local means with weights exp(-max(d2 - 2 s^2, 0) / h^2), d2 the mean
/// squared patch difference and s the noise level. The centre pixel gets the
/// largest weight among its neighbours. Without `noise_sigma` the level is
/// estimated from the image.
Image nlm(const Image& img, double h, int patch_radius, int search_radius,
          std::optional<double> noise_sigma = std::nullopt);

/// Weight NLM would give to q when denoising p (before normalization).
double nlm_weight(const Image& img, int px, int py, int qx, int qy, double h,
                  int patch_radius, double noise_sigma);

/// 8x8 orthonormal DCT over a stride-4 grid of blocks, hard thresholding of
/// AC coefficients below `threshold`, uniform averaging of the overlaps.
Image dct_denoise(const Image& img, double threshold);

/// Noise level used to scale the nlm and dct parameters: the MAD estimate,
/// floored at kMinNoiseSigma.
double parameter_noise_sigma(const Image& gray);

/// Runs a method with its grid or continuous setting; color is processed
/// one channel at a time.
Image denoise(const Image& img, const DenoiserId& id);

}  // namespace nrdq
